//! Randomized cross-validation harness: checks the intersection and union
//! algorithms against brute-force enumeration on hundreds of random
//! instances. Run with `cargo run --release --example cross_validate`.
use matsel::matroid::{max_cardinality_intersection, max_weight_common_basis, Matroid};
use matsel::structmat::{FieldConfig, Stream, StructuredMatrix};

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << n).map(move |m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
}

fn random_linear(st: &mut Stream, n: usize, rows: usize, salt: u64) -> Matroid {
    let mut sm = StructuredMatrix::new(rows, n);
    for c in 0..n {
        for r in 0..rows {
            match st.next_below(3) {
                0 => sm.set_fixed_int(r, c, 1 + st.next_below(4) as i64),
                1 => sm.set_free(r, c),
                _ => {}
            }
        }
    }
    Matroid::linear(&sm, &FieldConfig::with_seed(salt)).unwrap()
}

fn random_partition(st: &mut Stream, n: usize) -> Matroid {
    let classes = 1 + st.next_below(4) as usize;
    Matroid::partition(
        (0..n)
            .map(|_| {
                if st.next_below(6) == 0 {
                    None
                } else {
                    Some(st.next_below(classes as u64) as usize)
                }
            })
            .collect(),
    )
}

fn main() {
    let mut st = Stream::new(20260808);
    let mut card_checked = 0;
    let mut weight_checked = 0;
    let mut union_checked = 0;
    for trial in 0..400u64 {
        let n = 5 + st.next_below(3) as usize;
        let rows = 2 + st.next_below(3) as usize;
        let m1 = random_linear(&mut st, n, rows, trial);
        let m2 = match trial % 3 {
            0 => random_linear(&mut st, n, 3, trial + 1000),
            1 => random_partition(&mut st, n),
            _ => Matroid::uniform(n, 1 + st.next_below(4) as usize),
        };

        // cardinality intersection vs brute force
        let r = max_cardinality_intersection(&m1, &m2).unwrap();
        assert!(m1.is_independent(&r) && m2.is_independent(&r));
        let brute = subsets(n)
            .filter(|x| m1.is_independent(x) && m2.is_independent(x))
            .map(|x| x.len())
            .max()
            .unwrap();
        assert_eq!(r.len(), brute, "cardinality trial {trial}");
        card_checked += 1;

        // weighted common basis vs enumeration
        if m1.rank_full() == m2.rank_full() {
            let rk = m1.rank_full();
            let w: Vec<f64> = (0..n).map(|_| st.next_f64() * 10.0).collect();
            let best = subsets(n)
                .filter(|x| x.len() == rk && m1.is_independent(x) && m2.is_independent(x))
                .map(|x| x.iter().map(|&v| w[v]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            match max_weight_common_basis(&m1, &m2, &w) {
                Ok(s) => {
                    let got: f64 = s.iter().map(|&v| w[v]).sum();
                    assert!(
                        (got - best).abs() < 1e-9,
                        "weighted trial {trial}: {got} vs {best}"
                    );
                    weight_checked += 1;
                }
                Err(_) => assert!(best.is_infinite(), "missed basis, trial {trial}"),
            }
        }

        // union rank vs the exponential min formula
        let u = Matroid::union(&m1, &m2).unwrap();
        for x in subsets(n) {
            let formula = subsets(x.len())
                .map(|idx| {
                    let y: Vec<usize> = idx.iter().map(|&i| x[i]).collect();
                    m1.rank(&y) + m2.rank(&y) + x.len() - y.len()
                })
                .min()
                .unwrap();
            assert_eq!(u.rank(&x), formula, "union trial {trial} X = {x:?}");
        }
        union_checked += 1;
    }
    println!("cross-validate: cardinality {card_checked}, weighted {weight_checked}, union {union_checked} instances all matched brute force");
}
