/// Disjoint-set forest with union by size and path halving.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
    components: usize,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        assert!(n < u32::MAX as usize, "too many elements for a u32 forest");
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Add a fresh singleton and return its index.
    pub fn push(&mut self) -> usize {
        let i = self.parent.len();
        self.parent.push(i as u32);
        self.size.push(1);
        self.components += 1;
        i
    }

    #[inline]
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Root lookup without compression.
    #[inline]
    pub fn find_const(&self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            x = self.parent[x] as usize;
        }
        x
    }

    /// Merge the sets of `a` and `b`; returns `false` if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let mut ra = self.find(a);
        let mut rb = self.find(b);
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        self.components -= 1;
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Size of the set containing `x`.
    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }

    pub fn set_size_const(&self, x: usize) -> usize {
        self.size[self.find_const(x)] as usize
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    pub fn is_root(&self, x: usize) -> bool {
        self.parent[x] as usize == x
    }

    /// Fully compress so that every element points at its root.
    pub fn flatten(&mut self) {
        for i in 0..self.parent.len() {
            let r = self.find(i);
            self.parent[i] = r as u32;
        }
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.parent.len()).filter(move |&i| self.is_root(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_unions() {
        let mut d = DisjointSets::new(5);
        assert!(d.union(0, 1));
        assert!(!d.union(1, 0));
        assert!(d.union(3, 4));
        assert_eq!(d.component_count(), 3);
        assert_eq!(d.set_size(1), 2);
        assert!(d.same(3, 4));
        assert!(!d.same(2, 4));
        let x = d.push();
        assert_eq!(x, 5);
        d.union(5, 2);
        assert_eq!(d.set_size(2), 2);
        assert_eq!(d.roots().count(), 3);
    }

    proptest! {
        #[test]
        fn matches_naive_labelling(n in 1usize..40, edges in proptest::collection::vec((0usize..40, 0usize..40), 0..80)) {
            let mut d = DisjointSets::new(n);
            let mut label: Vec<usize> = (0..n).collect();
            for (a, b) in edges {
                let (a, b) = (a % n, b % n);
                d.union(a, b);
                let (la, lb) = (label[a], label[b]);
                if la != lb {
                    for l in label.iter_mut() {
                        if *l == lb { *l = la; }
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(d.same(i, j), label[i] == label[j]);
                }
                let sz = label.iter().filter(|&&l| l == label[i]).count();
                prop_assert_eq!(d.set_size(i), sz);
            }
            let distinct: std::collections::HashSet<_> = label.iter().collect();
            prop_assert_eq!(d.component_count(), distinct.len());
        }
    }
}
