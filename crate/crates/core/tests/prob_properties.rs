use eib_core::prob::{self, Encoder, JointDistribution};
use eib_core::rng;
use proptest::prelude::*;
use rand::Rng;

fn simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("zero mass", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
    })
}

fn any_simplex() -> impl Strategy<Value = Vec<f64>> {
    (1usize..=16).prop_flat_map(simplex)
}

fn joint_strategy() -> impl Strategy<Value = JointDistribution> {
    (1usize..=6, 1usize..=5).prop_flat_map(|(nx, ny)| {
        simplex(nx * ny).prop_map(move |p| JointDistribution::from_flat(nx, ny, p).unwrap())
    })
}

proptest! {
    #[test]
    fn entropy_lies_between_zero_and_log_len(p in any_simplex()) {
        let h = prob::entropy(&p).unwrap();
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (p.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn entropy_of_uniform_is_log_len(n in 1usize..=64) {
        let h = prob::entropy(&vec![1.0 / n as f64; n]).unwrap();
        prop_assert!((h - (n as f64).ln()).abs() < 1e-10);
    }

    #[test]
    fn mutual_information_is_kl_from_product(j in joint_strategy()) {
        let product = JointDistribution::product(&j.marginal_x(), &j.marginal_y()).unwrap();
        let kl = prob::kl_divergence(j.probs(), product.probs()).unwrap();
        prop_assert!((prob::mutual_information(&j) - kl).abs() < 1e-10);
    }

    #[test]
    fn kl_is_non_negative_and_zero_on_diagonal(p in simplex(5), q in simplex(5)) {
        prop_assert!(prob::kl_divergence(&p, &q).unwrap() >= 0.0);
        prop_assert_eq!(prob::kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn induced_quantities_match_double_loops(j in joint_strategy(), nt in 1usize..5, seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let rows: Vec<Vec<f64>> = (0..j.nx())
            .map(|_| {
                let v: Vec<f64> = (0..nt).map(|_| r.gen::<f64>() + 1e-3).collect();
                let s: f64 = v.iter().sum();
                v.iter().map(|x| x / s).collect()
            })
            .collect();
        let enc = Encoder::new(rows.clone()).unwrap();
        let pt = prob::induced_marginal(&j, &enc).unwrap();
        let dec = prob::induced_decoder(&j, &enc).unwrap();
        for t in 0..nt {
            let mut mass = 0.0;
            for x in 0..j.nx() {
                for y in 0..j.ny() {
                    mass += j.prob(x, y) * rows[x][t];
                }
            }
            prop_assert!((pt[t] - mass).abs() < 1e-12);
            for y in 0..j.ny() {
                let mut num = 0.0;
                for x in 0..j.nx() {
                    num += rows[x][t] * j.prob(x, y);
                }
                let expect = if mass > 0.0 { num / mass } else { 0.0 };
                prop_assert!((dec.prob(t, y) - expect).abs() < 1e-12);
            }
        }
    }
}

fn phi(x: f64) -> f64 {
    prob::phi(x).unwrap()
}

#[test]
fn phi_is_monotone_and_concave_on_a_grid() {
    let n = 1000;
    let v: Vec<f64> = (0..=n).map(|i| phi(i as f64 / n as f64)).collect();
    for w in v.windows(2) {
        assert!(w[1] >= w[0]);
    }
    for w in v.windows(3) {
        assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-9);
    }
}

#[test]
fn variance_lemmas_hold_on_seeded_discrete_variables() {
    let mut r = rng::seeded(101);
    for _ in 0..10_000 {
        let k = r.gen_range(1..=16);
        let a = r.gen_range(-5.0..5.0);
        let b = a + r.gen_range(0.0..10.0);
        let atoms: Vec<f64> = (0..k).map(|_| r.gen_range(a..=b)).collect();
        let w: Vec<f64> = (0..k).map(|_| r.gen::<f64>() + 1e-9).collect();
        let z: f64 = w.iter().sum();
        let mu: f64 = atoms.iter().zip(&w).map(|(x, p)| x * p / z).sum();
        let var: f64 = atoms.iter().zip(&w).map(|(x, p)| (x - mu).powi(2) * p / z).sum();
        assert!(var <= (b - mu) * (mu - a) + 1e-12, "{var} {a} {b} {mu}");

        let unit: Vec<f64> = atoms.iter().map(|x| if b > a { (x - a) / (b - a) } else { 0.0 }).collect();
        let mu: f64 = unit.iter().zip(&w).map(|(x, p)| x * p / z).sum();
        let var: f64 = unit.iter().zip(&w).map(|(x, p)| (x - mu).powi(2) * p / z).sum();
        assert!(var <= (1.0 - mu) * mu + 1e-12);
    }
}

#[test]
fn entropy_term_continuity_is_bounded_by_phi() {
    let xlogx = |v: f64| if v > 0.0 { v * v.ln() } else { 0.0 };
    let mut r = rng::seeded(102);
    for _ in 0..10_000 {
        let (a, b): (f64, f64) = (r.gen(), r.gen());
        assert!((xlogx(a) - xlogx(b)).abs() <= phi((a - b).abs()) + 1e-12);
    }
}

#[test]
fn square_root_entropy_inequality_holds() {
    let mut r = rng::seeded(103);
    for _ in 0..10_000 {
        let n = r.gen_range(1..=16);
        let v: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
        let s: f64 = v.iter().sum();
        let total: f64 = v
            .iter()
            .map(|x| x / s)
            .filter(|&x| x > 0.0)
            .map(|x| {
                let g = (x * (1.0 - x)).sqrt();
                let first = if g > 0.0 { g * g.ln() } else { 0.0 };
                first - x.sqrt() * x.ln()
            })
            .sum();
        assert!(total >= -1e-12, "{total}");
    }
}

#[test]
fn large_samples_concentrate() {
    let j = JointDistribution::new(vec![vec![0.05, 0.2], vec![0.3, 0.1], vec![0.15, 0.2]]).unwrap();
    for seed in 0..20 {
        let d = prob::sample_empirical(&j, 1_000_000, seed).unwrap();
        assert_eq!(d.counts().iter().flatten().sum::<u64>(), 1_000_000);
        let emp = d.empirical_joint();
        let dist = emp.probs().iter().zip(j.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dist < 0.005, "seed {seed}: {dist}");
    }
}

#[test]
fn sample_frequencies_are_unbiased() {
    let j = JointDistribution::new(vec![vec![0.1, 0.4], vec![0.0, 0.5]]).unwrap();
    let mut sums = [0u64; 4];
    for seed in 0..200 {
        let d = prob::sample_empirical(&j, 1000, seed).unwrap();
        for (s, c) in sums.iter_mut().zip(d.counts().iter().flatten()) {
            *s += c;
        }
    }
    assert_eq!(sums[2], 0);
    for (s, p) in sums.iter().zip(j.probs()) {
        let n = 200_000.0;
        let sd = (n * p * (1.0 - p)).sqrt();
        assert!((*s as f64 - n * p).abs() <= 5.0 * sd + 1e-9);
    }
}
