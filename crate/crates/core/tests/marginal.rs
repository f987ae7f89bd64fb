use copfdr::marginal::{
    build_table, build_table_with_tail, empirical_p1, mixture_cdf, mixture_quantile, p_two_sided, EmpiricalCdf,
    HypothesisRecord, HypothesisTable, NullMixture, Tail,
};
use copfdr::simulate::ks_statistic_uniform;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("g{i}")).collect()
}

#[test]
fn mixture_cdf_examples() {
    let n01 = NullMixture::standard_normal();
    assert_eq!(mixture_cdf(&n01, 0.0), 0.5);
    assert_eq!(mixture_cdf(&n01, f64::INFINITY), 1.0);
    assert_eq!(mixture_cdf(&n01, f64::NEG_INFINITY), 0.0);
    let paper = NullMixture::default();
    assert!((mixture_cdf(&paper, 0.0) - 0.501_498_442_355_698_06).abs() < 1e-14);
}

#[test]
fn mixture_quantile_examples() {
    let n01 = NullMixture::standard_normal();
    assert!(mixture_quantile(&n01, 0.5).unwrap().abs() < 1e-15);
    assert!((mixture_quantile(&n01, 0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
    assert!(mixture_quantile(&n01, 0.0).is_err());
    assert!(mixture_quantile(&n01, 1.0).is_err());
}

#[test]
fn two_sided_p_examples() {
    let n01 = NullMixture::standard_normal();
    assert_eq!(p_two_sided(&n01, 0.0), 1.0);
    // 2 (1 - Φ(1.959964)) to 30 digits
    assert!((p_two_sided(&n01, 1.959_964) - 0.049_999_998_192_884_81).abs() < 1e-15);
    assert_eq!(p_two_sided(&n01, f64::INFINITY), 0.0);
    assert_eq!(p_two_sided(&NullMixture::default(), f64::NEG_INFINITY), 0.0);
    assert_eq!(n01.p_value(1.0, Tail::Left), mixture_cdf(&n01, 1.0));
    assert!((n01.p_value(1.0, Tail::Right) + mixture_cdf(&n01, 1.0) - 1.0).abs() < 1e-15);
}

#[test]
fn mixture_validation() {
    assert!(NullMixture::new(vec![0.5, 0.4], vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    assert!(NullMixture::new(vec![1.0], vec![0.0], vec![0.0]).is_err());
    assert!(NullMixture::new(vec![0.5, 0.5], vec![0.0], vec![1.0, 1.0]).is_err());
    let m: NullMixture =
        serde_json::from_str(r#"{"weights":[0.615,0.385],"means":[0,-0.002],"sds":[0.063,0.205]}"#).unwrap();
    assert_eq!(m, NullMixture::default());
    assert!(serde_json::from_str::<NullMixture>(r#"{"weights":[1],"means":[0],"sds":[1],"extra":1}"#).is_err());
    assert!(serde_json::from_str::<NullMixture>(r#"{"weights":[0.9],"means":[0],"sds":[1]}"#).is_err());
}

#[test]
fn empirical_cdf_examples() {
    let h = EmpiricalCdf::new(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(h.eval(2.0), 0.5);
    assert_eq!(h.eval(0.0), 0.0);
    assert_eq!(empirical_p1(&h, 0.0), 1.0 / 5.0);
    assert_eq!(h.eval(4.0), 1.0);
    assert_eq!(empirical_p1(&h, 4.0), 4.0 / 5.0);
    assert_eq!(h.quantile(0.5).unwrap(), 2.0);
    // ties use <=
    let t = EmpiricalCdf::new(&[1.0, 1.0, 2.0]).unwrap();
    assert_eq!(t.eval(1.0), 2.0 / 3.0);
    assert!(EmpiricalCdf::new(&[]).is_err());
}

#[test]
fn build_table_examples() {
    let n01 = NullMixture::standard_normal();
    let t = build_table(&ids(1), &[0.0], &[1.0], &n01).unwrap();
    assert_eq!(t.records()[0].p2, 1.0);
    let t = build_table(&ids(3), &[0.1, 0.2, 0.3], &[1.0, 2.0, 3.0], &n01).unwrap();
    assert_eq!(t.p1(), vec![1.0 / 3.0, 2.0 / 3.0, 3.0 / 4.0]);
    assert!(build_table(&ids(2), &[0.1], &[1.0, 2.0], &n01).is_err());
    let dup = vec!["a".to_string(), "a".to_string()];
    assert!(build_table(&dup, &[0.1, 0.2], &[1.0, 2.0], &n01).is_err());
    let left = build_table_with_tail(&ids(1), &[-1.0], &[1.0], &n01, Tail::Left).unwrap();
    assert_eq!(left.records()[0].p2, mixture_cdf(&n01, -1.0));
}

#[test]
fn table_tsv_round_trip_is_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = NullMixture::default();
    let beta = m.sample(&mut rng, 200);
    let ys: Vec<f64> = beta.iter().map(|b| b.abs().sqrt() + 0.1).collect();
    let t = build_table(&ids(200), &beta, &ys, &m).unwrap();
    let mut buf = Vec::new();
    t.write_tsv(&mut buf).unwrap();
    let back = HypothesisTable::read_tsv(buf.as_slice(), "mem").unwrap();
    for (a, b) in t.records().iter().zip(back.records()) {
        assert_eq!(a.id, b.id);
        for (x, y) in [(a.beta_hat, b.beta_hat), (a.y, b.y), (a.p1, b.p1), (a.p2, b.p2)] {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn table_rejects_bad_records() {
    let rec = |id: &str, p1: f64| HypothesisRecord {
        id: id.into(),
        beta_hat: 0.0,
        y: 0.0,
        p1,
        p2: 0.5,
    };
    assert!(HypothesisTable::from_records(vec![]).is_err());
    assert!(HypothesisTable::from_records(vec![rec("a", 1.5)]).is_err());
    assert!(HypothesisTable::from_records(vec![rec("a", 0.5), rec("a", 0.4)]).is_err());
}

#[test]
fn mixture_cdf_is_monotone_on_a_fine_grid() {
    let m = NullMixture::default();
    let mut prev = 0.0;
    for i in 0..10_000 {
        let b = -2.0 + 4.0 * i as f64 / 9_999.0;
        let c = mixture_cdf(&m, b);
        assert!(c >= prev);
        prev = c;
    }
}

#[test]
fn null_p_values_are_uniform() {
    let n = 100_000;
    let m = NullMixture::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let p: Vec<f64> = m.sample(&mut rng, n).into_iter().map(|b| p_two_sided(&m, b)).collect();
    let d = ks_statistic_uniform(&p);
    assert!(d < 1.63 / (n as f64).sqrt(), "KS {d}");
}

#[test]
fn p1_has_the_rank_property() {
    let ys = [0.3, 1.7, 0.9, 2.2, 0.05, 1.1];
    let n = ys.len();
    let t = build_table(&ids(n), &[0.0; 6], &ys, &NullMixture::standard_normal()).unwrap();
    let mut p1 = t.p1();
    p1.sort_by(f64::total_cmp);
    let want: Vec<f64> = (1..=n)
        .map(|k| (k as f64 / n as f64).clamp(1.0 / (n as f64 + 1.0), n as f64 / (n as f64 + 1.0)))
        .collect();
    assert_eq!(p1, want);
}

proptest! {
    #[test]
    fn quantile_round_trip(q in 1e-6f64..0.999_999) {
        let m = NullMixture::default();
        let b = mixture_quantile(&m, q).unwrap();
        prop_assert!((mixture_cdf(&m, b) - q).abs() <= 1e-10);
    }
}
