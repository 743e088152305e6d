//! Bessel and Hankel functions of order 0 and 1 for real positive argument.
//!
//! Polynomial approximations from Abramowitz & Stegun §9.4 (absolute error
//! below 1e-7 over the full range), which is far tighter than any tolerance
//! used by the scattering kernels built on top of them.

use num_complex::Complex64;

/// Bessel function of the first kind, order 0.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 3.0 {
        let t = (x / 3.0) * (x / 3.0);
        1.0 + t * (-2.249_999_7
            + t * (1.265_620_8
                + t * (-0.316_386_6
                    + t * (0.044_447_9 + t * (-0.003_944_4 + t * 0.000_210_0)))))
    } else {
        let t = 3.0 / ax;
        let f = 0.797_884_56
            + t * (-0.000_000_77
                + t * (-0.005_527_40
                    + t * (-0.000_095_12
                        + t * (0.001_372_37 + t * (-0.000_728_05 + t * 0.000_144_76)))))
;
        let theta = ax - 0.785_398_164
            + t * (-0.041_663_97
                + t * (-0.000_039_54
                    + t * (0.002_625_73
                        + t * (-0.000_541_25 + t * (-0.000_293_33 + t * 0.000_135_58)))))
;
        f * theta.cos() / ax.sqrt()
    }
}

/// Bessel function of the second kind, order 0. Requires `x > 0`.
pub fn bessel_y0(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 3.0 {
        let t = (x / 3.0) * (x / 3.0);
        let p = 0.367_466_91
            + t * (0.605_593_66
                + t * (-0.743_505_84
                    + t * (0.253_001_17
                        + t * (-0.042_612_14 + t * (0.004_279_16 - t * 0.000_248_46)))));
        (2.0 / std::f64::consts::PI) * (x / 2.0).ln() * bessel_j0(x) + p
    } else {
        let t = 3.0 / x;
        let f = 0.797_884_56
            + t * (-0.000_000_77
                + t * (-0.005_527_40
                    + t * (-0.000_095_12
                        + t * (0.001_372_37 + t * (-0.000_728_05 + t * 0.000_144_76)))))
;
        let theta = x - 0.785_398_164
            + t * (-0.041_663_97
                + t * (-0.000_039_54
                    + t * (0.002_625_73
                        + t * (-0.000_541_25 + t * (-0.000_293_33 + t * 0.000_135_58)))))
;
        f * theta.sin() / x.sqrt()
    }
}

/// Bessel function of the first kind, order 1.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 3.0 {
        let t = (x / 3.0) * (x / 3.0);
        x * (0.5
            + t * (-0.562_499_85
                + t * (0.210_935_73
                    + t * (-0.039_542_89
                        + t * (0.004_433_19 + t * (-0.000_317_61 + t * 0.000_011_09))))))
    } else {
        let t = 3.0 / ax;
        let f = 0.797_884_56
            + t * (0.000_001_56
                + t * (0.016_596_67
                    + t * (0.000_171_05
                        + t * (-0.002_495_11 + t * (0.001_136_53 - t * 0.000_200_33)))));
        let theta = ax - 2.356_194_49
            + t * (0.124_996_12
                + t * (0.000_056_50
                    + t * (-0.006_378_79
                        + t * (0.000_743_48 + t * (0.000_798_24 - t * 0.000_291_66)))));
        let v = f * theta.cos() / ax.sqrt();
        if x < 0.0 {
            -v
        } else {
            v
        }
    }
}

/// Bessel function of the second kind, order 1. Requires `x > 0`.
pub fn bessel_y1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 3.0 {
        let t = (x / 3.0) * (x / 3.0);
        let p = -0.636_619_8
            + t * (0.221_209_1
                + t * (2.168_271_0
                    + t * (-1.316_482_7
                        + t * (0.312_395_1 + t * (-0.040_097_6 + t * 0.002_787_3)))));
        (2.0 / std::f64::consts::PI) * (x / 2.0).ln() * bessel_j1(x) + p / x
    } else {
        let t = 3.0 / x;
        let f = 0.797_884_56
            + t * (0.000_001_56
                + t * (0.016_596_67
                    + t * (0.000_171_05
                        + t * (-0.002_495_11 + t * (0.001_136_53 - t * 0.000_200_33)))));
        let theta = x - 2.356_194_49
            + t * (0.124_996_12
                + t * (0.000_056_50
                    + t * (-0.006_378_79
                        + t * (0.000_743_48 + t * (0.000_798_24 - t * 0.000_291_66)))));
        f * theta.sin() / x.sqrt()
    }
}

/// Hankel function of the first kind, order 0: `H0(1)(x) = J0(x) + i Y0(x)`.
pub fn hankel1_0(x: f64) -> Complex64 {
    Complex64::new(bessel_j0(x), bessel_y0(x))
}

/// Hankel function of the first kind, order 1: `H1(1)(x) = J1(x) + i Y1(x)`.
pub fn hankel1_1(x: f64) -> Complex64 {
    Complex64::new(bessel_j1(x), bessel_y1(x))
}
