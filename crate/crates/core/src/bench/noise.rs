//! Additive Gaussian noise scaled to a prescribed relative level:
//! `f_δ = f + κ z`, `κ = δ_rel ‖f‖ / ‖z‖`, `z` standard normal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::HilbertVector;
use crate::rng::{seeded, standard_normals};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub delta_rel: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseDraw {
    pub f_delta: HilbertVector,
    /// `δ = δ_rel ‖f‖`
    pub delta: f64,
    pub kappa: f64,
    /// Raw standard-normal draw `z`.
    pub raw: Vec<f64>,
    /// Seed actually used; differs from the requested one after a degenerate draw.
    pub seed_used: u64,
}

const MAX_REDRAWS: u64 = 16;

pub fn gen_noise(f: &HilbertVector, spec: &NoiseSpec) -> Result<NoiseDraw> {
    if !(spec.delta_rel > 0.0 && spec.delta_rel.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "delta_rel = {} must be > 0",
            spec.delta_rel
        )));
    }
    let delta = spec.delta_rel * f.norm();
    for k in 0..MAX_REDRAWS {
        let seed = spec.seed.wrapping_add(k);
        let raw = standard_normals(&mut seeded(seed), f.len());
        let z = f.with_values(raw.clone());
        let zn = z.norm();
        if zn > 0.0 && zn.is_finite() {
            let kappa = delta / zn;
            let mut f_delta = f.clone();
            f_delta.axpy(kappa, &z);
            return Ok(NoiseDraw {
                f_delta,
                delta,
                kappa,
                raw,
                seed_used: seed,
            });
        }
    }
    Err(Error::InvalidInput(format!(
        "degenerate noise for {MAX_REDRAWS} consecutive seeds from {}",
        spec.seed
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Grid;

    #[test]
    fn delta_is_exact() {
        let g = Grid::euclidean(4).unwrap();
        let f = g.vector(vec![2.0, 0.0, 0.0, 0.0]).unwrap();
        for seed in 0..20 {
            let d = gen_noise(&f, &NoiseSpec { delta_rel: 0.01, seed }).unwrap();
            assert_eq!(d.delta, 0.02);
            let achieved = d.f_delta.distance(&f);
            assert!((achieved - 0.02).abs() <= 1e-15);
        }
    }

    #[test]
    fn deterministic() {
        let g = Grid::trapezoid(50).unwrap();
        let f = g.constant(1.0);
        let spec = NoiseSpec { delta_rel: 0.05, seed: 42 };
        let a = gen_noise(&f, &spec).unwrap();
        let b = gen_noise(&f, &spec).unwrap();
        let bits = |v: &HilbertVector| v.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.f_delta), bits(&b.f_delta));
        let c = gen_noise(&f, &NoiseSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a.f_delta, c.f_delta);
    }

    #[test]
    fn raw_noise_is_centered() {
        let n = 50;
        let g = Grid::trapezoid(n).unwrap();
        let f = g.constant(1.0);
        let mut sum = 0.0;
        for seed in 0..1000 {
            let d = gen_noise(&f, &NoiseSpec { delta_rel: 0.01, seed }).unwrap();
            sum += d.raw.iter().sum::<f64>();
        }
        let count = (1000 * n) as f64;
        assert!((sum / count).abs() <= 4.0 / count.sqrt());
    }

    #[test]
    fn rejects_nonpositive_level() {
        let g = Grid::euclidean(2).unwrap();
        assert!(gen_noise(&g.constant(1.0), &NoiseSpec { delta_rel: 0.0, seed: 0 }).is_err());
    }
}
