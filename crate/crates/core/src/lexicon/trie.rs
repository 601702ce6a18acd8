//! Immutable prefix trie packed into flat node arrays.
//!
//! Nodes are laid out breadth-first so the children of a node are a
//! contiguous, label-sorted run. Every terminal node carries a sorted set of
//! rank indices; vocabulary tries hold exactly one per key, shadow tries
//! hold every rank whose word maps onto the key.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use super::codec::{read_varint, write_varint, Cursor};
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Node {
    first_child: u32,
    child_count: u32,
    payload_start: u32,
    payload_len: u32,
    /// Smallest rank stored anywhere below (or at) this node.
    subtree_min: u32,
}

/// One `prefix_search` hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefixMatch {
    pub index: u32,
    /// The stored key equals the searched prefix.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trie {
    nodes: Vec<Node>,
    labels: Vec<char>,
    payload: Vec<u32>,
    key_count: usize,
}

/// Collects `(key, index)` pairs before packing.
#[derive(Debug, Default)]
pub struct TrieBuilder {
    entries: BTreeMap<String, Vec<u32>>,
}

impl TrieBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: &str, index: u32) {
        self.entries.entry(key.to_string()).or_default().push(index);
    }

    pub fn build(self) -> Trie {
        struct Tmp {
            children: BTreeMap<char, usize>,
            payload: Vec<u32>,
        }
        let mut tmp = vec![Tmp {
            children: BTreeMap::new(),
            payload: Vec::new(),
        }];
        let key_count = self.entries.len();
        for (key, mut indices) in self.entries {
            let mut at = 0;
            for c in key.chars() {
                at = match tmp[at].children.get(&c) {
                    Some(&next) => next,
                    None => {
                        tmp.push(Tmp {
                            children: BTreeMap::new(),
                            payload: Vec::new(),
                        });
                        let id = tmp.len() - 1;
                        tmp[at].children.insert(c, id);
                        id
                    }
                };
            }
            indices.sort_unstable();
            indices.dedup();
            tmp[at].payload = indices;
        }

        // breadth-first relabelling
        let mut order = Vec::with_capacity(tmp.len());
        let mut labels = Vec::with_capacity(tmp.len());
        order.push(0usize);
        labels.push('\0');
        let mut head = 0;
        while head < order.len() {
            let id = order[head];
            head += 1;
            for (&c, &child) in &tmp[id].children {
                order.push(child);
                labels.push(c);
            }
        }

        let mut nodes = Vec::with_capacity(order.len());
        let mut payload = Vec::new();
        let mut next_child = 1u32;
        for &id in &order {
            let t = &tmp[id];
            nodes.push(Node {
                first_child: next_child,
                child_count: t.children.len() as u32,
                payload_start: payload.len() as u32,
                payload_len: t.payload.len() as u32,
                subtree_min: u32::MAX,
            });
            next_child += t.children.len() as u32;
            payload.extend_from_slice(&t.payload);
        }
        let mut trie = Trie {
            nodes,
            labels,
            payload,
            key_count,
        };
        trie.compute_subtree_min();
        trie
    }
}

impl Trie {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, u32)>) -> Trie {
        let mut b = TrieBuilder::new();
        for (k, i) in pairs {
            b.insert(k, i);
        }
        b.build()
    }

    fn compute_subtree_min(&mut self) {
        // children always follow their parent in BFS order
        for i in (0..self.nodes.len()).rev() {
            let n = self.nodes[i];
            let own = self.node_payload(i).first().copied().unwrap_or(u32::MAX);
            let kids = (n.first_child..n.first_child + n.child_count)
                .map(|c| self.nodes[c as usize].subtree_min)
                .min()
                .unwrap_or(u32::MAX);
            self.nodes[i].subtree_min = own.min(kids);
        }
    }

    /// Number of distinct keys.
    pub fn len(&self) -> usize {
        self.key_count
    }

    pub fn is_empty(&self) -> bool {
        self.key_count == 0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn node_payload(&self, i: usize) -> &[u32] {
        let n = &self.nodes[i];
        &self.payload[n.payload_start as usize..(n.payload_start + n.payload_len) as usize]
    }

    fn child(&self, node: usize, c: char) -> Option<usize> {
        let n = &self.nodes[node];
        let lo = n.first_child as usize;
        let hi = lo + n.child_count as usize;
        self.labels[lo..hi].binary_search(&c).ok().map(|off| lo + off)
    }

    fn walk(&self, prefix: &str) -> Option<usize> {
        if self.nodes.is_empty() {
            return None;
        }
        prefix.chars().try_fold(0, |at, c| self.child(at, c))
    }

    /// Rank indices stored under exactly `key`.
    pub fn get(&self, key: &str) -> Option<&[u32]> {
        self.walk(key).map(|n| self.node_payload(n)).filter(|p| !p.is_empty())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    /// Indices of all keys starting with `prefix`, in ascending index order,
    /// at most `limit` of them.
    pub fn prefix_search(&self, prefix: &str, limit: usize) -> Vec<PrefixMatch> {
        let mut out = Vec::new();
        let Some(start) = self.walk(prefix) else {
            return out;
        };
        if limit == 0 {
            return out;
        }
        // (min rank, is-value, node-or-rank, exact)
        let mut heap: BinaryHeap<Reverse<(u32, bool, u32, bool)>> = BinaryHeap::new();
        heap.push(Reverse((self.nodes[start].subtree_min, false, start as u32, true)));
        while let Some(Reverse((min, is_value, id, exact))) = heap.pop() {
            if min == u32::MAX {
                break;
            }
            if is_value {
                out.push(PrefixMatch { index: id, exact });
                if out.len() == limit {
                    break;
                }
                continue;
            }
            let node = id as usize;
            for &v in self.node_payload(node) {
                heap.push(Reverse((v, true, v, exact)));
            }
            let n = self.nodes[node];
            for c in n.first_child..n.first_child + n.child_count {
                heap.push(Reverse((self.nodes[c as usize].subtree_min, false, c, false)));
            }
        }
        out
    }

    /// Keys within restricted Damerau-Levenshtein distance `max` of `word`,
    /// as `(index, distance)` sorted by index. Rows of the distance table are
    /// carried down the trie and branches are cut once a row's minimum
    /// exceeds `max`.
    pub fn fuzzy_search(&self, word: &str, max: u32) -> Vec<(u32, u32)> {
        let target: Vec<char> = word.chars().collect();
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let first: Vec<u32> = (0..=target.len() as u32).collect();
        self.fuzzy_visit(0, '\0', &target, &first, None, max, &mut out);
        out.sort_unstable();
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn fuzzy_visit(
        &self,
        node: usize,
        label: char,
        target: &[char],
        row: &[u32],
        prev: Option<&[u32]>,
        max: u32,
        out: &mut Vec<(u32, u32)>,
    ) {
        let d = row[target.len()];
        if d <= max {
            out.extend(self.node_payload(node).iter().map(|&i| (i, d)));
        }
        let n = self.nodes[node];
        for c in n.first_child..n.first_child + n.child_count {
            let ch = self.labels[c as usize];
            let mut next = vec![row[0] + 1; target.len() + 1];
            for j in 1..=target.len() {
                let cost = u32::from(target[j - 1] != ch);
                let mut v = (row[j] + 1).min(next[j - 1] + 1).min(row[j - 1] + cost);
                if let Some(pp) = prev {
                    if j > 1 && target[j - 1] == label && target[j - 2] == ch {
                        v = v.min(pp[j - 2] + 1);
                    }
                }
                next[j] = v;
            }
            if next.iter().min().is_some_and(|&m| m <= max) {
                self.fuzzy_visit(c as usize, ch, target, &next, Some(row), max, out);
            }
        }
    }

    /// All `(key, indices)` pairs in lexicographic key order.
    pub fn entries(&self) -> Vec<(String, Vec<u32>)> {
        let mut out = Vec::with_capacity(self.key_count);
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![(0usize, String::new())];
        while let Some((node, key)) = stack.pop() {
            let p = self.node_payload(node);
            if !p.is_empty() {
                out.push((key.clone(), p.to_vec()));
            }
            let n = self.nodes[node];
            for c in (n.first_child..n.first_child + n.child_count).rev() {
                let mut k = key.clone();
                k.push(self.labels[c as usize]);
                stack.push((c as usize, k));
            }
        }
        out
    }

    /// Packs the trie: per node (BFS order) the child count, the children's
    /// labels delta-coded, then the sorted payload delta-coded. All varints.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_varint(&mut out, self.nodes.len() as u64);
        write_varint(&mut out, self.key_count as u64);
        for (i, n) in self.nodes.iter().enumerate() {
            write_varint(&mut out, n.child_count as u64);
            let mut prev = 0u32;
            for c in n.first_child..n.first_child + n.child_count {
                let label = self.labels[c as usize] as u32;
                write_varint(&mut out, (label - prev) as u64);
                prev = label;
            }
            let p = self.node_payload(i);
            write_varint(&mut out, p.len() as u64);
            let mut prev = 0u32;
            for (j, &v) in p.iter().enumerate() {
                write_varint(&mut out, if j == 0 { v } else { v - prev } as u64);
                prev = v;
            }
        }
        out
    }

    pub fn decode(bytes: &[u8], section: &'static str) -> Result<Trie, ModelError> {
        let mut cur = Cursor::new(bytes, section);
        let node_total = read_varint(&mut cur)? as usize;
        let key_count = read_varint(&mut cur)? as usize;
        if node_total > bytes.len() {
            return Err(cur.corrupt("node count exceeds section size"));
        }
        let mut nodes = Vec::with_capacity(node_total);
        let mut labels = vec!['\0'; node_total];
        let mut payload = Vec::new();
        let mut next_child = 1u32;
        for _ in 0..node_total {
            let child_count = read_varint(&mut cur)? as u32;
            if next_child as usize + child_count as usize > node_total {
                return Err(cur.corrupt("child index out of range"));
            }
            let mut prev = 0u32;
            for c in next_child..next_child + child_count {
                let delta = read_varint(&mut cur)? as u32;
                let label = prev
                    .checked_add(delta)
                    .and_then(char::from_u32)
                    .ok_or_else(|| cur.corrupt("invalid label"))?;
                labels[c as usize] = label;
                prev = label as u32;
            }
            let payload_len = read_varint(&mut cur)? as u32;
            let payload_start = payload.len() as u32;
            let mut prev = 0u32;
            for j in 0..payload_len {
                let v = read_varint(&mut cur)? as u32;
                let v = if j == 0 {
                    v
                } else {
                    prev.checked_add(v).ok_or_else(|| cur.corrupt("payload overflow"))?
                };
                payload.push(v);
                prev = v;
            }
            nodes.push(Node {
                first_child: next_child,
                child_count,
                payload_start,
                payload_len,
                subtree_min: u32::MAX,
            });
            next_child += child_count;
        }
        if !cur.is_at_end() {
            return Err(cur.corrupt("trailing bytes"));
        }
        let mut trie = Trie {
            nodes,
            labels,
            payload,
            key_count,
        };
        trie.compute_subtree_min();
        Ok(trie)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> Trie {
        // घर (rank 3) and कल (rank 1) share the shadow key कय
        Trie::from_pairs([("कय", 3), ("कय", 1), ("कक", 7)])
    }

    #[test]
    fn exact_lookup_returns_index_set() {
        let t = toy();
        assert_eq!(t.get("कय"), Some(&[1, 3][..]));
        assert_eq!(t.get("क"), None);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn prefix_search_on_toy_trie() {
        let t = toy();
        let hits = t.prefix_search("कय", 10);
        assert_eq!(
            hits,
            vec![
                PrefixMatch { index: 1, exact: true },
                PrefixMatch { index: 3, exact: true }
            ]
        );
        let hits = t.prefix_search("क", 10);
        assert_eq!(
            hits,
            vec![
                PrefixMatch { index: 1, exact: false },
                PrefixMatch { index: 3, exact: false },
                PrefixMatch { index: 7, exact: false }
            ]
        );
        assert!(t.prefix_search("ξ", 10).is_empty());
        assert_eq!(t.prefix_search("क", 2).len(), 2);
    }

    #[test]
    fn empty_trie() {
        let t = TrieBuilder::new().build();
        assert!(t.is_empty());
        assert!(t.prefix_search("a", 3).is_empty());
        let back = Trie::decode(&t.encode(), "TEST").unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn truncated_encoding_is_an_error() {
        let bytes = toy().encode();
        let err = Trie::decode(&bytes[..bytes.len() - 1], "SHADOWTRIE").unwrap_err();
        assert!(err.to_string().contains("SHADOWTRIE"));
    }

    fn osa(a: &str, b: &str) -> u32 {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0u32; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i as u32;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j as u32;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let cost = u32::from(a[i - 1] != b[j - 1]);
                d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
                if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                    d[i][j] = d[i][j].min(d[i - 2][j - 2] + 1);
                }
            }
        }
        d[a.len()][b.len()]
    }

    #[test]
    fn fuzzy_search_finds_transpositions() {
        let t = Trie::from_pairs([("kafi", 0), ("kaif", 1), ("kaafi", 2), ("ghar", 3)]);
        assert_eq!(t.fuzzy_search("kafi", 1), vec![(0, 0), (1, 1), (2, 1)]);
        assert_eq!(t.fuzzy_search("kafi", 0), vec![(0, 0)]);
        assert!(Trie::from_pairs([]).fuzzy_search("x", 2).is_empty());
    }

    proptest! {
        #[test]
        fn fuzzy_search_matches_brute_force(
            keys in proptest::collection::vec("[abc]{0,6}", 0..30),
            word in "[abcd]{0,6}",
            max in 0u32..3,
        ) {
            let t = Trie::from_pairs(keys.iter().enumerate().map(|(i, k)| (k.as_str(), i as u32)));
            let mut expected: Vec<(u32, u32)> = t
                .entries()
                .into_iter()
                .flat_map(|(k, p)| {
                    let d = osa(&k, &word);
                    p.into_iter().map(move |i| (i, d))
                })
                .filter(|&(_, d)| d <= max)
                .collect();
            expected.sort_unstable();
            prop_assert_eq!(t.fuzzy_search(&word, max), expected);
        }

        #[test]
        fn prefix_search_matches_brute_force(
            keys in proptest::collection::vec(("[abc]{1,5}", 0u32..200), 0..40),
            prefix in "[abc]{0,3}",
            limit in 1usize..50,
        ) {
            let t = Trie::from_pairs(keys.iter().map(|(k, i)| (k.as_str(), *i)));
            let mut expect: Vec<PrefixMatch> = Vec::new();
            let mut dedup = std::collections::BTreeSet::new();
            for (k, i) in &keys {
                if k.starts_with(&prefix) && dedup.insert((k.clone(), *i)) {
                    expect.push(PrefixMatch { index: *i, exact: *k == prefix });
                }
            }
            // ties on index pop non-exact first
            expect.sort_by_key(|m| (m.index, m.exact));
            expect.truncate(limit);
            prop_assert_eq!(t.prefix_search(&prefix, limit), expect);
        }

        #[test]
        fn encode_decode_is_identity(keys in proptest::collection::vec(("[a-zअ-ह]{1,6}", 0u32..100_000), 0..60)) {
            let t = Trie::from_pairs(keys.iter().map(|(k, i)| (k.as_str(), *i)));
            let back = Trie::decode(&t.encode(), "TEST").unwrap();
            prop_assert_eq!(back.entries(), t.entries());
            prop_assert_eq!(back, t);
        }
    }
}
