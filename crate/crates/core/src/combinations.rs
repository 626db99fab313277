//! Lexicographic k-subsets of `0..n`.

/// Advances `c` to the next k-subset of `0..n` in lexicographic order.
/// Returns `false` (leaving `c` unspecified) after the last one.
pub fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Calls `f` on every k-subset of `0..n` whose smallest element is `first`,
/// in lexicographic order, until `f` returns `Some`.
pub fn find_with_first<T>(
    n: usize,
    k: usize,
    first: usize,
    mut f: impl FnMut(&[usize]) -> Option<T>,
) -> Option<T> {
    assert!(k >= 1);
    if first + k > n {
        return None;
    }
    let mut tail: Vec<usize> = (first + 1..first + k).collect();
    let mut c = vec![0; k];
    loop {
        c[0] = first;
        c[1..].copy_from_slice(&tail);
        if let Some(t) = f(&c) {
            return Some(t);
        }
        // tail ranges over (k-1)-subsets of first+1..n
        if !advance_from(&mut tail, first + 1, n) {
            return None;
        }
    }
}

fn advance_from(c: &mut [usize], lo: usize, n: usize) -> bool {
    if c.is_empty() {
        return false;
    }
    for v in c.iter_mut() {
        *v -= lo;
    }
    let more = next_combination(c, n - lo);
    for v in c.iter_mut() {
        *v += lo;
    }
    more
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).unwrap_or(u64::MAX)
}

/// Position of `c` among the k-subsets of `0..n` in lexicographic order.
pub fn lex_rank(c: &[usize], n: usize) -> u64 {
    let k = c.len();
    let mut rank = 0;
    let mut prev = 0;
    for (i, &v) in c.iter().enumerate() {
        for skipped in prev..v {
            rank += binomial(n - skipped - 1, k - i - 1);
        }
        prev = v + 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut c: Vec<usize> = (0..k).collect();
        let mut out = vec![c.clone()];
        while k > 0 && next_combination(&mut c, n) {
            out.push(c.clone());
        }
        out
    }

    #[test]
    fn enumerates_in_lexicographic_order() {
        let got = all(5, 3);
        assert_eq!(got.len() as u64, binomial(5, 3));
        let mut sorted = got.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, got);
        assert_eq!(got[0], vec![0, 1, 2]);
        assert_eq!(got[9], vec![2, 3, 4]);
    }

    #[test]
    fn ranks_match_positions() {
        for (i, c) in all(7, 3).iter().enumerate() {
            assert_eq!(lex_rank(c, 7), i as u64);
        }
    }

    #[test]
    fn first_element_chunks_cover_everything_in_order() {
        let n = 6;
        for k in 1..=4 {
            let mut seen = Vec::new();
            for first in 0..n {
                find_with_first(n, k, first, |c| {
                    seen.push(c.to_vec());
                    None::<()>
                });
            }
            assert_eq!(seen, all(n, k));
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(66, 5), 8_936_928);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(6, 0), 1);
    }
}
