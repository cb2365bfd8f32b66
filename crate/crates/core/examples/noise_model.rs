//! Pooled per-bin deviations and the quadratic σ(z) fit on synthetic residuals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use depthcal::calibration::{
    bin_residuals, fit_sigma_quadratic, BinningConfig, DepthPair, PairStore, PoolingDivisor,
};

fn main() -> depthcal::Result<()> {
    let sigma = |z: f64| 0.002 + 0.0007 * z * z;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pixels = 400;
    let mut store = PairStore::new(20, 20);
    for pixel in 0..pixels {
        let offset = 0.01 * (pixel % 7) as f64;
        for i in 0..200 {
            let z = 0.5 + 4.0 * i as f64 / 199.0;
            let e = Normal::new(0.0, sigma(z)).unwrap().sample(&mut rng);
            store.push(pixel, DepthPair::new(z, z - offset - e)?);
        }
    }
    store.canonicalize();

    let binning = BinningConfig::default();
    let binned = bin_residuals(&store, &binning);
    let mut samples = Vec::new();
    println!("  bin    by-count   by-dof     true");
    for i in 0..binned.len() {
        let Ok(dof) = binned.pooled_sigma(i, 100, PoolingDivisor::DegreesOfFreedom) else {
            continue;
        };
        let count = binned.pooled_sigma(i, 100, PoolingDivisor::SampleCount).unwrap();
        println!(
            "{:5.2}  {:9.5}  {:9.5}  {:7.5}",
            dof.bin_center,
            count.sigma,
            dof.sigma,
            sigma(dof.bin_center)
        );
        samples.push(dof);
    }
    let fit = fit_sigma_quadratic(&samples)?;
    println!("sigma(z) = {:.3e} z² + {:.3e} z + {:.3e}", fit.a, fit.b, fit.c);
    Ok(())
}
