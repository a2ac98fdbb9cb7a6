use proptest::prelude::*;
use rilab::balance::balance_permutation;

/// Every nonincreasing sequence of `n` terms with values in `0..=top`.
fn sorted_sequences(n: usize, top: i64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    if prefix.len() == n {
        out.push(prefix.clone());
        return;
    }
    let cap = prefix.last().copied().unwrap_or(top);
    for v in 0..=cap {
        prefix.push(v);
        sorted_sequences(n, top, prefix, out);
        prefix.pop();
    }
}

fn check(d: &[i64], l: usize, m: usize) {
    let b = balance_permutation(d, l, m).unwrap();
    let mut seen = b.sigma.clone();
    seen.sort_unstable();
    assert_eq!(seen, (1..=d.len()).collect::<Vec<_>>());
    for (j, s) in b.blocks.iter().enumerate() {
        assert_eq!(*s, (0..m).map(|k| d[b.sigma[j * m + k] - 1]).sum::<i64>());
    }
    for (k, s) in b.round_spreads.iter().enumerate() {
        assert!(*s <= d[0], "{d:?} l={l} m={m} round {}", k + 1);
        // round k draws from its own index range
        for j in 0..l {
            let idx = b.sigma[j * m + k];
            assert!(idx > k * l && idx <= (k + 1) * l);
        }
    }
    assert!(b.bound_ok && b.spread <= d[0]);
}

#[test]
fn exhaustive_small_sequences() {
    let mut cases = 0;
    for n in 1..=12usize {
        // the number of sorted sequences grows fast; keep the value range small for long ones
        let top = if n <= 6 {
            9
        } else if n <= 9 {
            6
        } else {
            4
        };
        let mut seqs = Vec::new();
        sorted_sequences(n, top, &mut Vec::new(), &mut seqs);
        for l in (1..=n).filter(|l| n % l == 0) {
            for d in &seqs {
                check(d, l, n / l);
                cases += 1;
            }
        }
    }
    println!("{cases} instances");
    assert!(cases > 10_000);
}

proptest! {
    #[test]
    fn random_sequences(mut d in prop::collection::vec(0i64..1_000_000, 1..=60), l in 1usize..8) {
        let n = d.len() - d.len() % l;
        prop_assume!(n > 0);
        d.truncate(n);
        d.sort_unstable_by(|a, b| b.cmp(a));
        check(&d, l, n / l);
    }
}
