mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use robust_transport::decomposition::{good_decomposition, is_acyclic, loop_erase, remove_cycles};
use robust_transport::energy::{boundary_of_flow, eulerian_energy, lagrangian_energy};
use robust_transport::model::{EulerianCompetitor, LagrangianCompetitor};
use robust_transport::solver::{solve_eulerian, solve_lagrangian, Model, SolveOptions};

use common::{random_eulerian, random_instance, random_lagrangian};

const TOL: f64 = 1e-9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cycle_removal_keeps_the_boundary(seed: u64, raw in prop::collection::vec(-2.0f64..2.0, 20)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 12);
        let g = &inst.graph;
        let flow: Vec<f64> = raw.iter().take(g.num_edges()).copied()
            .chain(std::iter::repeat(0.0)).take(g.num_edges()).collect();
        let clean = remove_cycles(g, &flow);
        prop_assert!(is_acyclic(g, &clean));
        let (b0, b1) = (boundary_of_flow(g, &flow), boundary_of_flow(g, &clean));
        for (x, y) in b0.iter().zip(&b1) {
            prop_assert!((x - y).abs() < TOL, "{x} vs {y}");
        }
        for (x, y) in flow.iter().zip(&clean) {
            prop_assert!(y.abs() <= x.abs() + TOL);
            prop_assert!(*y == 0.0 || x.signum() == y.signum());
        }
    }

    #[test]
    fn decomposition_identities(seed: u64, raw in prop::collection::vec(-2.0f64..2.0, 20)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 12);
        let g = &inst.graph;
        let flow: Vec<f64> = raw.iter().take(g.num_edges()).copied()
            .chain(std::iter::repeat(0.0)).take(g.num_edges()).collect();
        let clean = remove_cycles(g, &flow);
        let d = good_decomposition(g, &clean, None).unwrap();
        prop_assert!(d.identities(g, &clean).holds(TOL));
    }

    #[test]
    fn loop_erasure_is_simple(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 12);
        let c = random_lagrangian(&mut rng, &inst);
        for p in &c.plan {
            let q = loop_erase(&p.path);
            prop_assert!(q.is_simple());
            prop_assert!(q.check(&inst.graph).is_ok());
            prop_assert_eq!((q.start(), q.end()), (p.path.start(), p.path.end()));
            prop_assert!(q.edges().len() <= p.path.edges().len());
        }
    }

    #[test]
    fn null_competitors_have_zero_energy(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 12);
        prop_assert_eq!(eulerian_energy(&inst, &EulerianCompetitor::null(&inst)).unwrap().energy, 0.0);
        prop_assert_eq!(lagrangian_energy(&inst, &LagrangianCompetitor::default()).unwrap().energy, 0.0);
    }

    #[test]
    fn energies_are_finite(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 12);
        let e = eulerian_energy(&inst, &random_eulerian(&mut rng, &inst)).unwrap();
        prop_assert!(e.energy.is_finite());
        prop_assert!((e.phi_mass - e.payoff_total - e.energy).abs() < TOL);
        let l = lagrangian_energy(&inst, &random_lagrangian(&mut rng, &inst)).unwrap();
        prop_assert!(l.energy.is_finite());
        prop_assert!((l.phi_mass - l.payoff_total - l.energy).abs() < TOL);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solvers_never_lose_to_the_null_competitor(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 8);
        let eo = SolveOptions { model: Model::Eulerian, restarts: 2, ..SolveOptions::default() };
        prop_assert!(solve_eulerian(&inst, &eo).unwrap().energy.energy <= 0.0);
        let lo = SolveOptions { model: Model::Lagrangian, restarts: 2, ..SolveOptions::default() };
        prop_assert!(solve_lagrangian(&inst, &lo).unwrap().energy.energy <= 0.0);
    }
}
