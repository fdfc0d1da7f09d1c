use super::rng;
use hvfwi::helmholtz::*;
use hvfwi::inversion::*;
use rand::Rng;

pub const FREQ: f64 = 15.0;

pub fn inclusion(amp: f64) -> VelocityModel2D {
    VelocityModel2D::from_fn(32, 32, 10.0, 10.0, |x, z| {
        1500.0 * (1.0 + amp * (-((x - 160.0).powi(2) + (z - 170.0).powi(2)) / 50.0f64.powi(2)).exp())
    })
    .unwrap()
}

pub fn geometry() -> AcquisitionGeometry {
    AcquisitionGeometry {
        sources: vec![(60.0, 20.0), (250.0, 290.0)],
        receivers: (0..32).map(|i| (i as f64 * 10.0, 40.0)).collect(),
        spectrum: SourceSpectrum::Flat,
    }
}

pub fn pml() -> PmlSpec {
    PmlSpec::tuned(10, 1500.0, 10.0)
}

/// Relative L2 error of the adjoint gradient against central differences
/// over 20 random cells.
pub fn gradient_error(choice: MisfitChoice, h: f64) -> f64 {
    let geo = geometry();
    let obs = forward_data(&inclusion(0.05), &geo, &[FREQ], pml()).unwrap();
    let model = inclusion(0.0);
    let g = objective(&model, &geo, &obs, FREQ, pml(), &choice, true).unwrap().gradient;
    let mut r = rng(21);
    let (mut num, mut den) = (0.0, 0.0);
    for _ in 0..20 {
        let cell = r.random_range(0..32 * 32);
        let value = |d: f64| {
            let mut c = model.velocities().to_vec();
            c[cell] += d;
            objective(&model.with_velocities(c).unwrap(), &geo, &obs, FREQ, pml(), &choice, false).unwrap().value
        };
        let fd = (value(h) - value(-h)) / (2.0 * h);
        num += (fd - g[cell]).powi(2);
        den += fd * fd;
    }
    (num / den).sqrt()
}
