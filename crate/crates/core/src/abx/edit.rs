/// Unit-cost Levenshtein distance between two phone sequences.
pub fn phone_edit_distance<S: AsRef<str>>(p: &[S], q: &[S]) -> usize {
    let mut prev: Vec<usize> = (0..=q.len()).collect();
    let mut cur = vec![0; q.len() + 1];
    for (i, a) in p.iter().enumerate() {
        cur[0] = i + 1;
        for (j, b) in q.iter().enumerate() {
            let sub = prev[j] + usize::from(a.as_ref() != b.as_ref());
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[q.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(p: &[u8], q: &[u8]) -> usize {
        match (p.split_first(), q.split_first()) {
            (None, _) => q.len(),
            (_, None) => p.len(),
            (Some((a, pr)), Some((b, qr))) => {
                let sub = naive(pr, qr) + usize::from(a != b);
                sub.min(naive(pr, q) + 1).min(naive(p, qr) + 1)
            }
        }
    }

    #[test]
    fn moloko_molotok() {
        let a = ["m", "@", "l", "2", "k", "o"];
        let b = ["m", "@", "l", "2", "t", "o", "k"];
        assert_eq!(phone_edit_distance(&a, &b), 2);
        assert_eq!(phone_edit_distance(&a, &a), 0);
    }

    proptest! {
        #[test]
        fn matches_recursive_definition(p in prop::collection::vec(0u8..4, 0..6), q in prop::collection::vec(0u8..4, 0..6)) {
            let ps: Vec<String> = p.iter().map(|c| c.to_string()).collect();
            let qs: Vec<String> = q.iter().map(|c| c.to_string()).collect();
            prop_assert_eq!(phone_edit_distance(&ps, &qs), naive(&p, &q));
        }
    }
}
