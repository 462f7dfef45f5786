//! Property-based checks for the interval layer, the paver, the dynamics
//! inclusion functions, and the automaton transforms, plus a cell-level
//! sandwich for the grid abstraction.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use winset::automaton::{preprocess, transition_matrix, trim_nba, PropFormula};
use winset::interval::IntervalBox;
use winset::oracle::{abstract_and_solve, finite_t_apply};
use winset::paver::{Paver, Tag};
use winset::system::{sample_controls, DynamicsConfig, Monomial, Polynomial, SystemSpec};

fn arb_box(dim: usize) -> impl Strategy<Value = IntervalBox> {
    proptest::collection::vec((-10.0f64..10.0, 0.01f64..5.0), dim).prop_map(|pairs| {
        let lo: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let hi: Vec<f64> = pairs.iter().map(|p| p.0 + p.1).collect();
        IntervalBox::new(lo, hi).unwrap()
    })
}

fn random_point_in(rng: &mut ChaCha8Rng, b: &IntervalBox) -> Vec<f64> {
    (0..b.dim())
        .map(|k| rng.gen_range(b.lo()[k]..=b.hi()[k]))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bisect_halves_the_widest_dimension(b in arb_box(3)) {
        let (l, r) = b.bisect().unwrap();
        let k = b.widest_dim();
        prop_assert_eq!(l.hi()[k], r.lo()[k]);
        prop_assert_eq!(l.lo()[k], b.lo()[k]);
        prop_assert_eq!(r.hi()[k], b.hi()[k]);
        prop_assert!(b.lo()[k] < l.hi()[k] && l.hi()[k] < b.hi()[k]);
        for j in 0..b.dim() {
            if j != k {
                prop_assert_eq!(l.lo()[j], b.lo()[j]);
                prop_assert_eq!(l.hi()[j], b.hi()[j]);
                prop_assert_eq!(r.lo()[j], b.lo()[j]);
                prop_assert_eq!(r.hi()[j], b.hi()[j]);
            }
        }
    }

    #[test]
    fn erode_and_inflate_nest(b in arb_box(2), d in 0.0f64..0.3) {
        let inflated = b.inflate(d);
        prop_assert!(inflated.contains_box(&b));
        for k in 0..b.dim() {
            prop_assert!((b.lo()[k] - inflated.lo()[k] - d).abs() < 1e-12);
            prop_assert!((inflated.hi()[k] - b.hi()[k] - d).abs() < 1e-12);
        }
        match b.erode(d) {
            Some(eroded) => {
                prop_assert!(b.contains_box(&eroded));
                for k in 0..b.dim() {
                    prop_assert!((eroded.lo()[k] - b.lo()[k] - d).abs() < 1e-12);
                    prop_assert!((b.hi()[k] - eroded.hi()[k] - d).abs() < 1e-12);
                }
            }
            None => {
                let min_side = (0..b.dim()).map(|k| b.side(k)).fold(f64::INFINITY, f64::min);
                prop_assert!(min_side <= 2.0 * d + 1e-12);
            }
        }
    }

    #[test]
    fn winning_view_agrees_with_leaf_tags(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = common::scalar_spec(0.0);
        let aps = ["a1".to_string(), "a2".to_string()];
        let mut paver = Paver::new(&spec, &aps).unwrap();
        for _ in 0..rng.gen_range(0..12) {
            let leaves = paver.leaf_ids();
            let id = leaves[rng.gen_range(0..leaves.len())];
            if paver.leaf_box(id).width() > 1e-6 {
                paver.bisect_leaf(id);
            }
        }
        let mut seq = 0u64;
        for id in paver.leaf_ids() {
            if rng.gen_bool(0.5) {
                seq += 1;
                paver.mark_winning(id, vec![0], seq);
            }
        }
        let view = paver.winning_view(u64::MAX);
        for id in paver.leaf_ids() {
            let b = paver.leaf_box(id).clone();
            let winning = paver.tag(id) == Tag::Winning;
            prop_assert_eq!(view.covers(&b), winning);
            let m = b.midpoint();
            let point = IntervalBox::new(m.clone(), m.clone()).unwrap();
            prop_assert_eq!(view.intersects(&point), winning);
            prop_assert_eq!(paver.point_winning(&m), winning);
        }
    }

    #[test]
    fn interval_image_contains_pointwise_steps(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poly = DynamicsConfig::Polynomial {
            n_states: 2,
            n_controls: 1,
            outputs: (0..2)
                .map(|_| Polynomial {
                    terms: (0..rng.gen_range(1..=3))
                        .map(|_| Monomial {
                            coeff: rng.gen_range(-1.5..1.5),
                            state_powers: vec![rng.gen_range(0..=2), rng.gen_range(0..=2)],
                            control_powers: vec![rng.gen_range(0..=1)],
                        })
                        .collect(),
                })
                .collect(),
        };
        let configs = [
            DynamicsConfig::ScalarAffine { center: rng.gen_range(-1.0..1.0) },
            DynamicsConfig::Vehicle { tau: rng.gen_range(0.1..0.5) },
            DynamicsConfig::DoubleIntegrator { tau: rng.gen_range(0.1..0.5) },
            poly,
        ];
        for config in &configs {
            let n = config.state_dim();
            let m = config.control_dim();
            let center: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let side: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
            let b = IntervalBox::new(
                center.iter().zip(&side).map(|(c, s)| c - s).collect(),
                center.iter().zip(&side).map(|(c, s)| c + s).collect(),
            )
            .unwrap();
            let u: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let img = config.image(&b, &u);
            for _ in 0..20 {
                let x = random_point_in(&mut rng, &b);
                let y = config.step(&x, &u);
                for k in 0..n {
                    prop_assert!(
                        img.lo()[k] - 1e-9 <= y[k] && y[k] <= img.hi()[k] + 1e-9,
                        "{} image misses step output at coordinate {k}: {} not in [{}, {}]",
                        config.name(), y[k], img.lo()[k], img.hi()[k]
                    );
                }
            }
        }
    }

    #[test]
    fn control_grid_lies_on_the_lattice(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = rng.gen_range(-2.0..0.0);
        let hi = lo + rng.gen_range(0.3..2.0);
        let pinned = rng.gen_range(-1.0..1.0);
        let mu = rng.gen_range(0.05..0.25);
        let spec = SystemSpec::new(
            IntervalBox::new(vec![-5.0; 4], vec![5.0; 4]).unwrap(),
            IntervalBox::new(vec![lo, pinned], vec![hi, pinned]).unwrap(),
            0.0,
            1.0,
            DynamicsConfig::DoubleIntegrator { tau: 0.1 },
            Default::default(),
        )
        .unwrap();
        let grid = sample_controls(&spec, mu).unwrap();
        prop_assert!(grid.len() > 0);
        let mut firsts: Vec<f64> = Vec::new();
        for i in 0..grid.len() {
            let p = grid.point(i);
            prop_assert!(lo - 1e-9 <= p[0] && p[0] <= hi + 1e-9);
            prop_assert_eq!(p[1], pinned);
            let ratio = p[0] / mu;
            prop_assert!((ratio - ratio.round()).abs() < 1e-6, "off-lattice point {}", p[0]);
            firsts.push(p[0]);
        }
        firsts.sort_by(f64::total_cmp);
        for w in firsts.windows(2) {
            prop_assert!((w[1] - w[0] - mu).abs() < 1e-9);
        }
    }

    #[test]
    fn preprocessing_orders_blocks_without_backward_edges(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(1..=2usize);
        let dba = common::random_total_dba(&mut rng, &["a", "b"][..k], 6);
        let pre = preprocess(&dba);

        let mut sorted = pre.order.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..dba.n_states).collect::<Vec<_>>());
        prop_assert_eq!(pre.blocks.iter().sum::<usize>(), dba.n_states);
        prop_assert!(pre.n_live <= dba.n_states);

        let matrix = transition_matrix(&dba, &pre.order).unwrap();
        let block_of: Vec<usize> = pre
            .blocks
            .iter()
            .enumerate()
            .flat_map(|(bi, &len)| std::iter::repeat(bi).take(len))
            .collect();
        for i in 0..dba.n_states {
            for j in 0..dba.n_states {
                if matrix.entries[i][j] != PropFormula::Empty {
                    prop_assert!(
                        block_of[j] >= block_of[i],
                        "backward edge from position {i} to {j}"
                    );
                }
            }
        }
        // Accepting positions precede non-accepting ones within a block...
        // no: they come last, so once a block position is accepting every
        // later position of that block is accepting too.
        let mut start = 0;
        for &len in &pre.blocks {
            let mut seen_accepting = false;
            for p in start..start + len {
                if matrix.accepting[p] {
                    seen_accepting = true;
                } else {
                    prop_assert!(!seen_accepting, "accepting before non-accepting in a block");
                }
            }
            start += len;
        }
        // Every accepting state is live, and nothing past the live prefix
        // reaches an accepting state.
        for p in 0..dba.n_states {
            if matrix.accepting[p] {
                prop_assert!(p < pre.n_live);
            }
        }
        let mut reaches = matrix.accepting.clone();
        loop {
            let mut changed = false;
            for i in 0..dba.n_states {
                if reaches[i] {
                    continue;
                }
                if (0..dba.n_states)
                    .any(|j| reaches[j] && matrix.entries[i][j] != PropFormula::Empty)
                {
                    reaches[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for p in pre.n_live..dba.n_states {
            prop_assert!(!reaches[p], "dead position {p} reaches an accepting state");
        }
    }

    #[test]
    fn trimming_is_deterministic_total_and_edge_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(1..=2usize);
        let nba = common::random_nba(&mut rng, &["a", "b"][..k], 4);
        let trimmed = trim_nba(&nba).unwrap();
        prop_assert!(trimmed.validate_deterministic_total().is_ok());
        prop_assert!(
            trimmed.n_states == nba.n_states || trimmed.n_states == nba.n_states + 1
        );
        prop_assert_eq!(trimmed.initial, nba.initial);
        prop_assert_eq!(&trimmed.accepting, &nba.accepting);
        let sink = nba.n_states;
        for q in 0..nba.n_states {
            for &mask in &trimmed.feasible_masks() {
                let t = trimmed.transition(q, mask).unwrap();
                let mut enabled: Vec<usize> = nba.edges[q]
                    .iter()
                    .filter(|(g, _)| g.eval_mask(&nba.aps, mask))
                    .map(|&(_, to)| to)
                    .collect();
                enabled.sort_unstable();
                enabled.dedup();
                if t == sink && trimmed.n_states == nba.n_states + 1 {
                    prop_assert!(enabled.is_empty(), "sink used while edges were enabled");
                } else {
                    let best = enabled
                        .iter()
                        .copied()
                        .find(|s| nba.accepting.contains(s))
                        .or_else(|| enabled.first().copied());
                    prop_assert_eq!(Some(t), best);
                }
            }
        }
        if trimmed.n_states == nba.n_states + 1 {
            prop_assert!(!trimmed.accepting.contains(&sink));
            prop_assert_eq!(trimmed.transition(sink, 0), Some(sink));
        }
    }

    #[test]
    fn operator_is_monotone_on_random_instances(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(1..=2usize);
        let aps = &["a", "b"][..k];
        let dba = common::random_total_dba(&mut rng, aps, 3);
        let ts = common::random_ts(&mut rng, aps, 6, 3);
        let n = ts.states.len();
        let w: Vec<BTreeSet<usize>> = (0..dba.n_states)
            .map(|_| (0..n).filter(|_| rng.gen_bool(0.5)).collect())
            .collect();
        let v: Vec<BTreeSet<usize>> = w
            .iter()
            .map(|row| row.iter().copied().filter(|_| rng.gen_bool(0.7)).collect())
            .collect();
        let tv = finite_t_apply(&ts, &dba, &v).unwrap();
        let tw = finite_t_apply(&ts, &dba, &w).unwrap();
        for q in 0..dba.n_states {
            prop_assert!(tv[q].is_subset(&tw[q]));
        }
    }
}

/// Cell-level sandwich for the uniform-grid baseline on the scalar task:
/// every winning cell lies inside the nominal analytic set, and every cell
/// inside the disturbance-robust analytic set wins.
#[test]
fn abstraction_cells_sandwich_the_analytic_sets() {
    let dba = common::load_dba("automata/seq_a1_a2.dba");
    let spec = common::scalar_spec(0.0);
    let (abs, win, _, _) = abstract_and_solve(&spec, &dba, 0.005, 0.005, None).unwrap();
    let nominal = [common::nominal_exact_q1(), common::nominal_exact_q2()];
    let perturbed = [common::perturbed_exact_q1(), common::perturbed_exact_q2()];
    let slack = 1e-9;
    for (i, &q) in [1usize, 2].iter().enumerate() {
        for cell in 0..abs.n_cells {
            let b = abs.cell_box(cell);
            let (lo, hi) = (b.lo()[0], b.hi()[0]);
            if win[q].contains(&cell) {
                assert!(
                    common::interval_in_union(lo + slack, hi - slack, &nominal[i]),
                    "cell [{lo}, {hi}] wrongly wins row q{q}"
                );
            }
            if common::interval_in_union(lo - slack, hi + slack, &perturbed[i]) {
                assert!(
                    win[q].contains(&cell),
                    "cell [{lo}, {hi}] must win row q{q}"
                );
            }
        }
    }
}
