//! Slow, obviously-correct reference implementations used to check the
//! gec-lab library. Nothing here shares code with the library apart from
//! plain data types.

pub mod m2 {
    //! Exhaustive MaxMatch: every minimum-cost token path, every way of
    //! cutting it into edits.

    #[derive(Debug, Clone, PartialEq, Eq)]
    pub struct Span {
        pub start: usize,
        pub end: usize,
        pub replacement: Vec<String>,
    }

    #[derive(Clone, Copy, PartialEq, Eq)]
    enum Step {
        Match,
        Sub,
        Del,
        Ins,
    }

    fn walk(src: &[String], hyp: &[String], i: usize, j: usize, path: &mut Vec<Step>, cost: usize, out: &mut Vec<(usize, Vec<Step>)>) {
        if i == src.len() && j == hyp.len() {
            out.push((cost, path.clone()));
            return;
        }
        if i < src.len() && j < hyp.len() {
            let (step, c) = if src[i] == hyp[j] { (Step::Match, 0) } else { (Step::Sub, 1) };
            path.push(step);
            walk(src, hyp, i + 1, j + 1, path, cost + c, out);
            path.pop();
        }
        if i < src.len() {
            path.push(Step::Del);
            walk(src, hyp, i + 1, j, path, cost + 1, out);
            path.pop();
        }
        if j < hyp.len() {
            path.push(Step::Ins);
            walk(src, hyp, i, j + 1, path, cost + 1, out);
            path.pop();
        }
    }

    /// Every valid hypothesis edit sequence.
    pub fn candidate_edit_sets(src: &[String], hyp: &[String], max_unchanged: usize) -> Vec<Vec<Span>> {
        let mut paths = Vec::new();
        walk(src, hyp, 0, 0, &mut Vec::new(), 0, &mut paths);
        let best = paths.iter().map(|(c, _)| *c).min().unwrap_or(0);
        let mut sets: Vec<Vec<Span>> = Vec::new();
        for (_, path) in paths.iter().filter(|(c, _)| *c == best) {
            let steps = path.len();
            let masks: u64 = if steps == 0 { 1 } else { 1 << (steps - 1) };
            'cut: for mask in 0..masks {
                let mut edits: Vec<Span> = Vec::new();
                let (mut i, mut j) = (0, 0);
                let mut seg_start = (0, 0);
                let (mut matches, mut changes) = (0, 0);
                for (k, step) in path.iter().enumerate() {
                    match step {
                        Step::Match => {
                            i += 1;
                            j += 1;
                            matches += 1;
                        }
                        Step::Sub => {
                            i += 1;
                            j += 1;
                            changes += 1;
                        }
                        Step::Del => {
                            i += 1;
                            changes += 1;
                        }
                        Step::Ins => {
                            j += 1;
                            changes += 1;
                        }
                    }
                    let cut_here = k + 1 == steps || mask & (1 << k) != 0;
                    if cut_here {
                        if changes > 0 {
                            if matches > max_unchanged {
                                continue 'cut;
                            }
                            edits.push(Span {
                                start: seg_start.0,
                                end: i,
                                replacement: hyp[seg_start.1..j].to_vec(),
                            });
                        }
                        seg_start = (i, j);
                        matches = 0;
                        changes = 0;
                    }
                }
                let bare_insert = |e: &Span| e.start == e.end;
                if edits
                    .windows(2)
                    .any(|w| bare_insert(&w[0]) && bare_insert(&w[1]) && w[0].start == w[1].start)
                {
                    continue;
                }
                if !sets.contains(&edits) {
                    sets.push(edits);
                }
            }
        }
        sets
    }

    /// (tp, fp, fn) of the best candidate: most gold matches, then fewest
    /// edits.
    pub fn best_counts(candidates: &[Vec<Span>], gold: &[Span]) -> (usize, usize, usize) {
        let mut best: Option<(usize, usize)> = None;
        for c in candidates {
            let tp = c.iter().filter(|e| gold.contains(e)).count();
            let better = match best {
                None => true,
                Some((btp, blen)) => tp > btp || (tp == btp && c.len() < blen),
            };
            if better {
                best = Some((tp, c.len()));
            }
        }
        let (tp, len) = best.expect("at least one path exists");
        (tp, len - tp, gold.len() - tp)
    }

    pub fn f_beta(tp: usize, fp: usize, fn_: usize, beta: f64) -> f64 {
        let p = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
        let r = if tp + fn_ == 0 { 1.0 } else { tp as f64 / (tp + fn_) as f64 };
        if p + r == 0.0 {
            return 0.0;
        }
        let b2 = beta * beta;
        (1.0 + b2) * p * r / (b2 * p + r)
    }
}

pub mod alignment {
    //! Minimum alignment cost by depth-first search over every operation
    //! sequence, in half-token units: exact match 0, case-only substitution
    //! 1, substitution 2, insertion 2, deletion 2, adjacent swap 2.

    fn dfs(src: &[String], hyp: &[String], i: usize, j: usize, cost: u32, best: &mut u32) {
        let left = (src.len() - i).abs_diff(hyp.len() - j) as u32;
        if cost + 2 * left >= *best {
            return;
        }
        if i == src.len() && j == hyp.len() {
            *best = cost;
            return;
        }
        if i < src.len() && j < hyp.len() {
            let c = if src[i] == hyp[j] {
                0
            } else if src[i].to_lowercase() == hyp[j].to_lowercase() {
                1
            } else {
                2
            };
            dfs(src, hyp, i + 1, j + 1, cost + c, best);
        }
        if i + 1 < src.len() && j + 1 < hyp.len() && src[i] == hyp[j + 1] && src[i + 1] == hyp[j] {
            dfs(src, hyp, i + 2, j + 2, cost + 2, best);
        }
        if i < src.len() {
            dfs(src, hyp, i + 1, j, cost + 2, best);
        }
        if j < hyp.len() {
            dfs(src, hyp, i, j + 1, cost + 2, best);
        }
    }

    /// The minimum cost if it is below `bound`.
    pub fn min_cost_below(src: &[String], hyp: &[String], bound: u32) -> Option<u32> {
        let mut best = bound;
        dfs(src, hyp, 0, 0, 0, &mut best);
        (best < bound).then_some(best)
    }
}

pub mod gleu {
    //! GLEU written out longhand from its definition.

    use std::collections::BTreeMap;

    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grams(tokens: &[&str], n: usize) -> BTreeMap<String, i64> {
        let mut m = BTreeMap::new();
        let mut k = 0;
        while k + n <= tokens.len() {
            *m.entry(tokens[k..k + n].join("\u{1}")).or_insert(0) += 1;
            k += 1;
        }
        m
    }

    /// Per-order (numerator, denominator) plus lengths for one sentence.
    fn stats(src: &[&str], hyp: &[&str], rf: &[&str], n_max: usize) -> (Vec<i64>, Vec<i64>, i64, i64) {
        let mut num = Vec::new();
        let mut den = Vec::new();
        for n in 1..=n_max {
            let (h, r, s) = (grams(hyp, n), grams(rf, n), grams(src, n));
            let mut total = 0;
            for (g, &hc) in &h {
                let rc = *r.get(g).unwrap_or(&0);
                let sc = *s.get(g).unwrap_or(&0);
                total += hc.min(rc);
                total -= (hc.min(sc) - rc).max(0);
            }
            num.push(total.max(0));
            den.push((hyp.len() as i64 - n as i64 + 1).max(0));
        }
        (num, den, hyp.len() as i64, rf.len() as i64)
    }

    pub fn corpus(
        sources: &[Vec<&str>],
        hypotheses: &[Vec<&str>],
        references: &[Vec<Vec<&str>>],
        n_max: usize,
        iterations: usize,
        seed: u64,
    ) -> f64 {
        let iterations = if references.iter().all(|r| r.len() == 1) { 1 } else { iterations };
        let mut sum = 0.0;
        for it in 0..iterations {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(it as u64);
            let mut num = vec![0i64; n_max];
            let mut den = vec![0i64; n_max];
            let (mut c, mut r) = (0i64, 0i64);
            for k in 0..sources.len() {
                let refs = &references[k];
                let pick = if refs.len() > 1 { rng.random_range(0..refs.len()) } else { 0 };
                let (sn, sd, sc, sr) = stats(&sources[k], &hypotheses[k], &refs[pick], n_max);
                for n in 0..n_max {
                    num[n] += sn[n];
                    den[n] += sd[n];
                }
                c += sc;
                r += sr;
            }
            let score = if num.iter().chain(&den).any(|&x| x == 0) {
                0.0
            } else {
                let bp = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
                let mean_log: f64 =
                    (0..n_max).map(|n| (num[n] as f64 / den[n] as f64).ln()).sum::<f64>() / n_max as f64;
                bp * mean_log.exp()
            };
            sum += score;
        }
        sum / iterations as f64
    }
}

/// All sequences over `alphabet` of length `0..=max_len`.
pub fn all_sequences(alphabet: &[&str], max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for a in alphabet {
                let mut t = s.clone();
                t.push((*a).to_owned());
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}
