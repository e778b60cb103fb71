use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use roiregress::dataset::RoiMatrix;
use roiregress::gp::sexpr::{parse_text, to_text};
use roiregress::gp::{crossover, mutate, random_genome, ExpressionGenome, GpConfig, Node};

fn assert_structure(g: &ExpressionGenome<f64>, max_nodes: usize, n_vars: usize) {
    assert!(!g.is_empty() && g.len() <= max_nodes, "len {}", g.len());
    assert!(g.output() < g.len());
    for (i, n) in g.nodes().iter().enumerate() {
        for op in n.operands() {
            assert!(op < i, "node {i} references {op}");
        }
        if let Node::Var(v) = n {
            assert!(*v < n_vars);
        }
    }
}

fn cfg() -> GpConfig {
    GpConfig {
        crossover_rate: 1.0,
        mutation_rate: 1.0,
        ..GpConfig::default()
    }
}

proptest! {
    #[test]
    fn evaluation_is_total(seed in any::<u64>(), row in prop::collection::vec(-1e6f64..1e6, 6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: ExpressionGenome<f64> = random_genome(&GpConfig::default(), 6, &mut rng);
        prop_assert!(g.eval_row(&row).is_finite());
    }

    #[test]
    fn variation_preserves_structure(seed in any::<u64>()) {
        let c = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a: ExpressionGenome<f64> = random_genome(&c, 4, &mut rng);
        let mut b: ExpressionGenome<f64> = random_genome(&c, 4, &mut rng);
        for _ in 0..20 {
            if let Some((x, y)) = crossover(&a, &b, &c, &mut rng) {
                a = x;
                b = y;
            }
            mutate(&mut a, &c, 4, &mut rng);
            assert_structure(&a, c.max_nodes, 4);
            assert_structure(&b, c.max_nodes, 4);
        }
    }

    #[test]
    fn text_round_trip_preserves_semantics(seed in any::<u64>(), row in prop::collection::vec(-10f64..10.0, 5)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: ExpressionGenome<f64> = random_genome(&GpConfig::default(), 5, &mut rng);
        let back: ExpressionGenome<f64> = parse_text(&to_text(&g)).unwrap();
        let (a, b) = (g.eval_row(&row), back.eval_row(&row));
        prop_assert!(a == b || (a.is_nan() && b.is_nan()), "{a} vs {b}");
        prop_assert_eq!(to_text(&back), to_text(&g));
    }

    #[test]
    fn row_permutation_permutes_output(seed in any::<u64>(), shift in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: ExpressionGenome<f64> = random_genome(&GpConfig::default(), 3, &mut rng);
        let rows: Vec<Vec<f64>> = (0..10).map(|t| (0..3).map(|c| (t * 3 + c) as f64 * 0.37 - 4.0).collect()).collect();
        let rotated: Vec<Vec<f64>> = (0..10).map(|t| rows[(t + shift) % 10].clone()).collect();
        let out = g.eval_series(&RoiMatrix::from_rows(&rows, 1.0).unwrap()).unwrap();
        let out_rot = g.eval_series(&RoiMatrix::from_rows(&rotated, 1.0).unwrap()).unwrap();
        for t in 0..10 {
            prop_assert_eq!(out_rot[t].to_bits(), out[(t + shift) % 10].to_bits());
        }
    }
}

#[test]
fn self_crossover_is_semantics_preserving() {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let row = [0.3, -1.2, 2.5];
    for _ in 0..500 {
        let g: ExpressionGenome<f64> = random_genome(&c, 3, &mut rng);
        let (x, y) = crossover(&g, &g, &c, &mut rng).expect("rate 1");
        let want = g.eval_row(&row);
        assert_eq!(x.eval_row(&row).to_bits(), want.to_bits());
        assert_eq!(y.eval_row(&row).to_bits(), want.to_bits());
    }
}

#[test]
fn mutation_rate_matches_two_chances() {
    let c = GpConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let trials = 10_000;
    let mut changed = 0;
    for _ in 0..trials {
        let mut g: ExpressionGenome<f64> = random_genome(&c, 4, &mut rng);
        let before = g.clone();
        mutate(&mut g, &c, 4, &mut rng);
        changed += usize::from(g != before);
    }
    let frac = changed as f64 / trials as f64;
    assert!((frac - 0.19).abs() <= 0.02, "{frac}");
}

#[test]
fn f32_genomes_evaluate() {
    let g: ExpressionGenome<f32> = roiregress::gp::sexpr::parse_sexpr("(+ (exp x0) (/ x1 0))").unwrap();
    assert_eq!(g.eval_row(&[0.0, 2.0]), 2.0);
    assert!(g.eval_row(&[1000.0, 1.0]).is_finite());
}

#[test]
fn structural_hash_separates_small_expressions() {
    let texts = ["x1", "(sin x0)", "(abs x3)", "(cos (exp x2))", "(+ x0 x1)", "(+ x1 x0)", "(- x0 x1)", "2.5", "2.25"];
    let hashes: std::collections::HashSet<u64> = texts
        .iter()
        .map(|t| roiregress::gp::sexpr::parse_sexpr::<f64>(t).unwrap().structural_hash())
        .collect();
    assert_eq!(hashes.len(), texts.len());
}
