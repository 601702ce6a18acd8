//! Edit distances over codepoints.
//!
//! Transpositions are of adjacent characters and a transposed pair is not
//! edited again (the restricted, "optimal string alignment" form).

fn osa_table(a: &[char], b: &[char]) -> Vec<Vec<u32>> {
    let mut d = vec![vec![0u32; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i as u32;
    }
    for (j, v) in d[0].iter_mut().enumerate() {
        *v = j as u32;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = u32::from(a[i - 1] != b[j - 1]);
            let mut v = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                v = v.min(d[i - 2][j - 2] + 1);
            }
            d[i][j] = v;
        }
    }
    d
}

pub fn damerau_levenshtein(a: &str, b: &str) -> u32 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    osa_table(&a, &b)[a.len()][b.len()]
}

/// Smallest distance between `typed` and any prefix of `word`.
pub fn prefix_distance(typed: &str, word: &str) -> u32 {
    let a: Vec<char> = typed.chars().collect();
    let b: Vec<char> = word.chars().collect();
    let d = osa_table(&a, &b);
    d[a.len()].iter().copied().min().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct recursive definition over suffixes, no table.
    fn recursive(a: &[char], b: &[char]) -> u32 {
        match (a, b) {
            ([], _) => b.len() as u32,
            (_, []) => a.len() as u32,
            ([x, ra @ ..], [y, rb @ ..]) => {
                let mut best = (recursive(ra, b) + 1)
                    .min(recursive(a, rb) + 1)
                    .min(recursive(ra, rb) + u32::from(x != y));
                if let ([x0, x1, ra2 @ ..], [y0, y1, rb2 @ ..]) = (a, b) {
                    if x0 == y1 && x1 == y0 && x0 != x1 {
                        best = best.min(recursive(ra2, rb2) + 1);
                    }
                }
                best
            }
        }
    }

    #[test]
    fn known_values() {
        assert_eq!(damerau_levenshtein("kaafi", "kafi"), 1);
        assert_eq!(damerau_levenshtein("kafi", "kaif"), 1);
        assert_eq!(damerau_levenshtein("apoorvaa", "apurva"), 3);
        assert_eq!(damerau_levenshtein("", "घर"), 2);
        assert_eq!(damerau_levenshtein("घर", "कल"), 2);
        assert_eq!(prefix_distance("pradhaanmant", "pradhanmantri"), 1);
        assert_eq!(prefix_distance("", "abc"), 0);
    }

    proptest! {
        #[test]
        fn table_matches_recursive_definition(a in "[abc]{0,5}", b in "[abc]{0,5}") {
            let ca: Vec<char> = a.chars().collect();
            let cb: Vec<char> = b.chars().collect();
            prop_assert_eq!(damerau_levenshtein(&a, &b), recursive(&ca, &cb));
        }

        #[test]
        fn prefix_distance_is_min_over_prefixes(a in "[abc]{0,5}", b in "[abc]{0,6}") {
            let chars: Vec<char> = b.chars().collect();
            let oracle = (0..=chars.len())
                .map(|n| damerau_levenshtein(&a, &chars[..n].iter().collect::<String>()))
                .min()
                .unwrap();
            prop_assert_eq!(prefix_distance(&a, &b), oracle);
        }

        #[test]
        fn symmetric(a in "[abc]{0,6}", b in "[abc]{0,6}") {
            prop_assert_eq!(damerau_levenshtein(&a, &b), damerau_levenshtein(&b, &a));
        }
    }
}
