use pftsim::embedding_geometry::Embedding;
use pftsim::evolve::{apply_frame_change, evolve_foliation, vacuum_state};
use pftsim::field_model::flat_mode_frame;
use pftsim::foliation::{build_interpolating, Schedule};
use pftsim::lattice::{Boundary, LatticeSpec};

#[test]
fn boost_transport_path_independence_and_frame_offset() {
    let w = 0.2_f64;
    let lam = w.tanh();
    for (n, dx) in [(64usize, 0.2), (128usize, 0.1)] {
        let spec = LatticeSpec::new(n, dx, 1.0, Boundary::FixedZero).unwrap();
        let flat = Embedding::flat(spec);
        let c = spec.center_x();
        let tilt = Embedding::from_profile(spec, |x| (lam * (x - c), x)).unwrap();
        let frame_a = flat_mode_frame(&spec, &flat).unwrap();
        let vac = vacuum_state(&spec, &frame_a, &flat).unwrap();
        let single = apply_frame_change(&spec, &vac, &flat, &tilt).unwrap();
        let fol = build_interpolating(&flat, &tilt, Schedule::Linear, 400).unwrap();
        let (path, _) = evolve_foliation(&spec, &vac, &fol).unwrap();
        let d = (&single.covariance - &path.covariance).amax();
        let frame_b = flat_mode_frame(&spec, &tilt).unwrap();
        let vac_b = vacuum_state(&spec, &frame_b, &tilt).unwrap();
        let dv = (&single.covariance - &vac_b.covariance).amax();
        eprintln!("N={n}: |single - path| = {d:.3e},  |single - inst_vacuum| = {dv:.3e}");
    }
    panic!("inspect");
}
