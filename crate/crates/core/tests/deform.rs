use plateau_core::coeff::CoeffGroup;
use plateau_core::complex::{CellComplex, GridSpec};
use plateau_core::deform::{
    deform_chain, deform_pointset_with, select_center, verify_projection_bound, PLChain, Piece, WeightedPoint,
};
use plateau_core::exec::Exec;
use plateau_core::geometry::Polytope;
use plateau_core::homology::is_boundary;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(level: u32) -> CellComplex {
    CellComplex::dyadic_grid(&GridSpec::unit(2, level)).unwrap()
}

fn random_loop(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let m = rng.gen_range(3..9);
    (0..m).map(|_| vec![rng.gen_range(0.02..0.98), rng.gen_range(0.02..0.98)]).collect()
}

#[test]
fn random_loops_deform_to_closed_cycles() {
    let k = grid(3);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut ratios = Vec::new();
    let mut worst_size = 0.0f64;
    for trial in 0..100 {
        let pts = random_loop(&mut rng);
        let s = PLChain::polyline(CoeffGroup::integers(), &pts, true, 1).unwrap();
        let (out, cert) = deform_chain(&s, &k, 0.75, trial).unwrap();
        assert!(out.boundary(&k).unwrap().is_zero(), "trial {trial}");
        assert!(cert.identity_holds, "trial {trial}: residual {}", cert.identity_residual);
        assert!(cert.squash_lipschitz <= 4.0 + 1e-9);
        let (bounds, witness) = is_boundary(&k, &out, &k.full_subcomplex()).unwrap();
        assert!(bounds && witness.is_some());
        ratios.push(cert.mass_ratio());
        worst_size = worst_size.max(cert.size_out / cert.size_in);
    }
    ratios.sort_by(f64::total_cmp);
    let median = ratios[50];
    assert!(ratios[99] <= 10.0 * median, "max {} median {median}", ratios[99]);
    eprintln!("mass ratio median {median:.3} max {:.3}; worst size ratio {worst_size:.3}", ratios[99]);
}

#[test]
fn diagonal_boundary_is_exact() {
    let k = grid(2);
    let s = PLChain::polyline(CoeffGroup::integers(), &[vec![0.0, 0.0], vec![1.0, 1.0]], false, 1).unwrap();
    for seed in 0..20 {
        let (out, cert) = deform_chain(&s, &k, 0.75, seed).unwrap();
        let b = out.boundary(&k).unwrap();
        let v00 = k.cell_id(&plateau_core::complex::GridKey { anchor: vec![0, 0], axes: vec![] }).unwrap();
        let v11 = k.cell_id(&plateau_core::complex::GridKey { anchor: vec![4, 4], axes: vec![] }).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.get(v11), 1);
        assert_eq!(b.get(v00), -1);
        assert!(cert.identity_holds);
    }
}

#[test]
fn pointset_tracks_chain_mass() {
    let k = grid(2);
    let (a, b) = ([0.1, 0.2], [0.8, 0.9]);
    let s = PLChain::polyline(CoeffGroup::integers(), &[a.to_vec(), b.to_vec()], false, 1).unwrap();
    let (out, cert) = deform_chain(&s, &k, 0.75, 9).unwrap();
    let n = 10_000;
    let l = ((b[0] - a[0]) as f64).hypot(b[1] - a[1]);
    let tangent = vec![(b[0] - a[0]) / l, (b[1] - a[1]) / l];
    let pts: Vec<WeightedPoint> = (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            WeightedPoint {
                x: vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
                weight: l / n as f64,
                tangent: Some(tangent.clone()),
            }
        })
        .collect();
    let t = deform_pointset_with(&pts, &k, &cert.plan, Exec::Parallel).unwrap();
    let mass = out.mass(&k);
    assert!((t.weight_out - mass).abs() <= 0.02 * mass, "points {} chain {mass}", t.weight_out);
}

#[test]
fn center_selection_is_fast() {
    let sq = Polytope::aabb(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
    let load = vec![Piece::segment(vec![0.0, 0.3], vec![1.0, 0.7], 1.0)];
    let ok = (0..1000).filter(|&seed| select_center(&sq, &load, 0.75, seed).map_or(false, |s| s.draws_used <= 50)).count();
    assert!(ok >= 990, "{ok}");
}

#[test]
fn projection_ratios_are_scale_invariant() {
    let sq = Polytope::aabb(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
    let big = Polytope::aabb(&[0.0, 0.0], &[2.0, 2.0]).unwrap();
    let e = vec![Piece::segment(vec![0.0, 0.0], vec![1.0, 1.0], 1.0)];
    let e2 = vec![Piece::segment(vec![0.0, 0.0], vec![2.0, 2.0], 1.0)];
    let r1 = verify_projection_bound(&sq, &[e], 0.75, 1000, 4, Exec::Sequential).unwrap();
    let r2 = verify_projection_bound(&big, &[e2], 0.75, 1000, 4, Exec::Sequential).unwrap();
    for (x, y) in r1.loads[0].ratios.iter().zip(&r2.loads[0].ratios) {
        assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
    }
    assert!(r1.worst_violation_fraction <= 0.75 + 0.05);
    assert!(r1.worst_markov_fraction <= 0.75);
}
