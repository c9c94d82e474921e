use jaguar::feasible_sets::FeasibleSet;
use jaguar::rng::{Stream, Streams};
use jaguar::vector::dot;
use rand::Rng;

/// Vertices in index order: `e_j` for the simplex, `+r e_j` then `−r e_j`
/// for the l1 ball.
fn vertices(set: &FeasibleSet) -> Vec<Vec<f64>> {
    let d = set.dim();
    let mut out = Vec::new();
    for j in 0..d {
        match *set {
            FeasibleSet::Simplex { .. } => out.push(jaguar::vector::basis(d, j)),
            FeasibleSet::L1Ball { radius, .. } => {
                for sign in [1.0, -1.0] {
                    let mut v = vec![0.0; d];
                    v[j] = sign * radius;
                    out.push(v);
                }
            }
            _ => unreachable!(),
        }
    }
    out
}

fn brute_force(set: &FeasibleSet, g: &[f64]) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for v in vertices(set) {
        let val = dot(&v, g);
        if best.as_ref().is_none_or(|b| val < b.0) {
            best = Some((val, v));
        }
    }
    best.unwrap().1
}

#[test]
fn lmo_matches_vertex_enumeration() {
    let mut rng = Streams::new(0).rng(Stream::Harness);
    for _ in 0..500 {
        let d = rng.random_range(1..=20);
        // coarse integer grid forces ties
        let g: Vec<f64> = (0..d).map(|_| rng.random_range(-3i32..=3) as f64).collect();
        for set in [FeasibleSet::simplex(d), FeasibleSet::l1_ball(d, 1.5).unwrap()] {
            let lmo = set.lmo(&g).unwrap();
            let bf = brute_force(&set, &g);
            assert_eq!(dot(&lmo, &g), dot(&bf, &g));
            if let FeasibleSet::Simplex { .. } = set {
                assert_eq!(lmo, bf, "{g:?}");
            }
        }
    }
}
