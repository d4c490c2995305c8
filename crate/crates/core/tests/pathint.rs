use std::time::Instant;

use loewner_core::drivers::{path_seed, sample_driver, DriverKind, FiniteEnergyDriver, TimeGrid};
use loewner_core::flow::FlowConfig;
use loewner_core::pathint::*;
use loewner_core::stats::RunningStats;
use num_complex::Complex64;

#[test]
fn brownian_bracket_mean_over_seeds() {
    // Dyadic sum of 2^10 squared N(0, 2^-10) increments: mean 1, sd sqrt(2 / 2^10) per seed.
    let n = 1 << 16;
    let g = TimeGrid::new(1.0, n).unwrap();
    let parts = PartitionSequence::dyadic(n, 64, 3).unwrap();
    let start = Instant::now();
    let mut st = RunningStats::new();
    for s in 0..1000 {
        let u = sample_driver(&DriverKind::Brownian { kappa: 1.0 }, g, path_seed(2024, s)).unwrap();
        st.push(follmer_qv(&u, &parts, 1.0).unwrap().total());
    }
    eprintln!("qv mean {} sd {} in {:?}", st.mean, st.variance().sqrt(), start.elapsed());
    assert!((0.97..=1.03).contains(&st.mean));
    let sd_oracle = (2.0f64 / 1024.0).sqrt();
    assert!((st.variance().sqrt() / sd_oracle - 1.0).abs() < 0.15);
}

#[test]
fn representation_on_piecewise_driver_refines() {
    let mut gaps = Vec::new();
    for log2n in [10, 11, 12, 13] {
        let g = TimeGrid::dyadic(1.0, log2n).unwrap();
        let h = FiniteEnergyDriver::piecewise_slopes(g, &[1.5, -0.5, 2.0, 0.0]).unwrap();
        let r = check_representation(
            h.path(),
            Complex64::new(0.0, 0.1),
            1.0,
            None,
            &FlowConfig::rk4(4),
            RepresentationForm::RiemannStieltjes,
            1e-4,
        )
        .unwrap();
        gaps.push(r.max_gap);
    }
    eprintln!("gaps {gaps:?}");
    assert!(gaps.windows(2).all(|w| w[1] <= w[0] / 2.0));
    assert!(*gaps.last().unwrap() < 1e-4);
}

#[test]
fn rough_and_follmer_forms_agree_per_level() {
    let g = TimeGrid::dyadic(1.0, 12).unwrap();
    let u = sample_driver(&DriverKind::Brownian { kappa: 1.0 }, g, 8).unwrap();
    let z = Complex64::new(0.0, 0.2);
    let a = check_representation(&u, z, 1.0, None, &FlowConfig::slit(1), RepresentationForm::Follmer, 1.0).unwrap();
    let b = check_representation(&u, z, 1.0, None, &FlowConfig::slit(1), RepresentationForm::Rough, 1.0).unwrap();
    for (x, y) in a.level_gaps.iter().zip(&b.level_gaps) {
        assert!((x - y).abs() < 1e-10);
    }
}
