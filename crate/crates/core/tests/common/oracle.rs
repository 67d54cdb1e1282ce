//! Deliberately naive reference implementations used as test oracles.

/// Matches each hypothesis n-gram against a still-unused equal reference n-gram.
pub fn ngram_hits(hyp: &[String], reference: &[String], n: usize) -> usize {
    if hyp.len() < n || reference.len() < n {
        return 0;
    }
    let mut used = vec![false; reference.len() - n + 1];
    let mut hits = 0;
    for i in 0..=hyp.len() - n {
        for j in 0..used.len() {
            if !used[j] && hyp[i..i + n] == reference[j..j + n] {
                used[j] = true;
                hits += 1;
                break;
            }
        }
    }
    hits
}

/// Memoised top-down LCS recursion.
pub fn lcs(a: &[String], b: &[String]) -> usize {
    fn go(
        a: &[String],
        b: &[String],
        i: usize,
        j: usize,
        memo: &mut Vec<Vec<Option<usize>>>,
    ) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len()]; a.len()];
    go(a, b, 0, 0, &mut memo)
}

/// (precision, recall, f1) from a hit count; empty sides score zero.
pub fn prf(hits: usize, hyp_total: usize, ref_total: usize) -> (f64, f64, f64) {
    if hyp_total == 0 || ref_total == 0 {
        return (0.0, 0.0, 0.0);
    }
    let p = hits as f64 / hyp_total as f64;
    let r = hits as f64 / ref_total as f64;
    let f = if hits == 0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    };
    (p, r, f)
}

/// ROUGE-1, ROUGE-2 and LCS-based ROUGE-L for one hypothesis/reference token pair.
pub fn rouge(hyp: &[String], reference: &[String]) -> [(f64, f64, f64); 3] {
    if hyp.is_empty() || reference.is_empty() {
        return [(0.0, 0.0, 0.0); 3];
    }
    let n2 = |x: &[String]| x.len().saturating_sub(1);
    [
        prf(ngram_hits(hyp, reference, 1), hyp.len(), reference.len()),
        prf(ngram_hits(hyp, reference, 2), n2(hyp), n2(reference)),
        prf(lcs(hyp, reference), hyp.len(), reference.len()),
    ]
}

/// Best objective over every nonempty subset of at most `max_select` sentences.
pub fn exhaustive_oracle<F: Fn(&[usize]) -> f64>(
    n: usize,
    max_select: usize,
    objective: F,
) -> (Vec<usize>, f64) {
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for mask in 1u32..(1 << n) {
        if mask.count_ones() as usize > max_select {
            continue;
        }
        let set: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let v = objective(&set);
        if v > best.1 {
            best = (set, v);
        }
    }
    best
}
