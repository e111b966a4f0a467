use extmix::accessibility::transitivity_group;
use extmix::compact_group::{Backend, HaarQuadrature, Irrep};
use extmix::correlation::{correlate, Suspension, SuspensionObservable};
use extmix::fourier::TrigSeries;
use extmix::grid::Grid;
use extmix::symbolic_model::{ExpandingModel, HolonomyCocycle, RoofFunction};
use extmix::thermo::{rpf_solve, Potential, DEFAULT_TOL};
use extmix::transfer::{Observable, TwistedOperator};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn zero_potential_pressure_is_log_branch_count() {
    for (m, k) in [(ExpandingModel::Tripling, 3.0f64), (ExpandingModel::Perturbed { k: 3, a: 0.2 }, 3.0), (ExpandingModel::Perturbed { k: 2, a: -0.3 }, 2.0)] {
        let s = rpf_solve(&m, &Potential::zero(), Grid::power_of_two(11).unwrap(), DEFAULT_TOL).unwrap();
        assert!((s.pressure - k.ln()).abs() < 1e-8, "{m:?}: {}", s.pressure);
    }
}

#[test]
fn fiber_character_has_no_zero_time_correlation() {
    let m = ExpandingModel::Doubling;
    let s = rpf_solve(&m, &Potential::zero(), Grid::power_of_two(10).unwrap(), DEFAULT_TOL).unwrap();
    let roof = RoofFunction::default_benchmark();
    let cocycle = HolonomyCocycle::so2_benchmark();
    let haar = HaarQuadrature::so2(16);
    // character 1 against character 2: orthogonal on the fiber for any base factor
    let a = SuspensionObservable::so2_mode(TrigSeries::new(0.7, vec![1.0], vec![]), 1).with_measured_mean(&s, &roof, &haar);
    let b = SuspensionObservable::so2_mode(TrigSeries::new(0.3, vec![], vec![0.5]), 2).with_measured_mean(&s, &roof, &haar);
    let sys = Suspension { model: &m, roof: &roof, cocycle: &cocycle, state: &s };
    let series = correlate(sys, &[a, b], &[vec![0.0]], 200_000, 5).unwrap();
    assert!(series.estimates[0].abs() <= 4.0 * series.std_errors[0], "{} vs {}", series.estimates[0], series.std_errors[0]);
}

#[test]
fn gauge_change_keeps_transitivity_dimension() {
    let m = ExpandingModel::Doubling;
    let base = HolonomyCocycle::su2_benchmark();
    let gauge = HolonomyCocycle::Su2Exp { x: TrigSeries::sine(0.0, 0.3), y: TrigSeries::cosine(0.2, 0.1), z: TrigSeries::default() };
    let gauged = base.gauge_transform(&gauge, &m).unwrap();
    for x in [0.05, 0.3, 0.62, 0.9] {
        let d0 = transitivity_group(&m, &base, x, 40, 16).unwrap().dimension;
        let d1 = transitivity_group(&m, &gauged, x, 40, 16).unwrap().dimension;
        assert_eq!((d0, d1), (3, 3), "x = {x}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// The untwisted operator at z = P preserves the invariant measure for any smooth potential.
    #[test]
    fn untwisted_operator_preserves_integrals(a in -0.8f64..0.8, b in -0.8f64..0.8, seed in any::<u64>()) {
        let s = rpf_solve(&ExpandingModel::Doubling, &Potential::trig(TrigSeries::new(0.0, vec![a], vec![b])), Grid::power_of_two(11).unwrap(), DEFAULT_TOL).unwrap();
        let roof = RoofFunction::default_benchmark();
        let irrep = Irrep::So2 { n: 0 };
        let op = TwistedOperator::new(&s, &roof, &HolonomyCocycle::Trivial(Backend::So2), irrep, C::new(s.pressure, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = Observable::random_band_limited(s.grid, irrep, 1, 5, &mut rng);
        let out = op.apply(&phi).unwrap();
        let mean = |o: &Observable| -> C { o.values.iter().zip(&s.measure).map(|(v, w)| v * w).sum() };
        prop_assert!((mean(&out) - mean(&phi)).norm() <= 1e-6 * phi.c1_norm());
    }
}
