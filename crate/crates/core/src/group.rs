//! Finite groups as full multiplication tables.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::is_prime;

/// A finite group on the elements `0..n`.
///
/// `mul(a, b)` is the product `ab`; for groups built from permutations this
/// is the composite "apply `b`, then `a`".
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteGroup {
    order: usize,
    table: Vec<usize>,
    identity: usize,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    /// Validates a multiplication table `table[a][b] = ab`.
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty table".into()));
        }
        if let Some(r) = table.iter().position(|row| row.len() != n) {
            return Err(Error::InvalidGroup(format!("row {} has length {}, expected {}", r, table[r].len(), n)));
        }
        for (a, row) in table.iter().enumerate() {
            if let Some(b) = row.iter().position(|&v| v >= n) {
                return Err(Error::InvalidGroup(format!("entry ({}, {}) = {} out of range", a, b, row[b])));
            }
        }
        let flat: Vec<usize> = table.into_iter().flatten().collect();
        let at = |a: usize, b: usize| flat[a * n + b];
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| at(e, g) == g && at(g, e) == g))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        let mut inverse = vec![0; n];
        for g in 0..n {
            inverse[g] = (0..n)
                .find(|&h| at(g, h) == identity && at(h, g) == identity)
                .ok_or_else(|| Error::InvalidGroup(format!("element {} has no inverse", g)))?;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if at(at(a, b), c) != at(a, at(b, c)) {
                        return Err(Error::InvalidGroup(format!(
                            "associativity fails on triple ({}, {}, {})",
                            a, b, c
                        )));
                    }
                }
            }
        }
        Ok(FiniteGroup { order: n, table: flat, identity, inverse })
    }

    /// Closure of a set of permutations of `0..degree`.
    ///
    /// Elements are numbered in breadth-first discovery order starting from the
    /// identity; the returned words give each element as a list of generator
    /// indices `[i1, .., ik]` meaning `gen[ik] ... gen[i1]` (first letter applied first).
    pub fn from_permutations(generators: &[Vec<usize>]) -> Result<(Self, Vec<Vec<usize>>, Vec<Vec<usize>>)> {
        let degree = generators.first().map_or(0, |g| g.len());
        for (i, g) in generators.iter().enumerate() {
            let mut seen = vec![false; g.len()];
            if g.len() != degree || g.iter().any(|&x| x >= degree || std::mem::replace(&mut seen[x], true)) {
                return Err(Error::InvalidGroup(format!("generator {} is not a permutation of 0..{}", i, degree)));
            }
        }
        let id: Vec<usize> = (0..degree).collect();
        let mut elements = vec![id.clone()];
        let mut words: Vec<Vec<usize>> = vec![vec![]];
        let mut index: BTreeMap<Vec<usize>, usize> = BTreeMap::from([(id, 0)]);
        let mut head = 0;
        while head < elements.len() {
            let cur = elements[head].clone();
            for (gi, g) in generators.iter().enumerate() {
                let next: Vec<usize> = cur.iter().map(|&x| g[x]).collect();
                if !index.contains_key(&next) {
                    index.insert(next.clone(), elements.len());
                    let mut w = words[head].clone();
                    w.push(gi);
                    words.push(w);
                    elements.push(next);
                }
            }
            head += 1;
            if elements.len() > 100_000 {
                return Err(Error::InvalidGroup("permutation group too large".into()));
            }
        }
        let n = elements.len();
        let mut table = vec![vec![0; n]; n];
        for a in 0..n {
            for b in 0..n {
                let ab: Vec<usize> = elements[b].iter().map(|&x| elements[a][x]).collect();
                table[a][b] = index[&ab];
            }
        }
        let group = FiniteGroup::from_table(table)?;
        Ok((group, elements, words))
    }

    pub fn trivial() -> Self {
        Self::cyclic(1)
    }

    pub fn cyclic(n: usize) -> Self {
        assert!(n > 0);
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::from_table(table).expect("cyclic table")
    }

    /// Symmetric group on `k` letters, elements in lexicographic permutation order.
    pub fn symmetric(k: usize) -> Self {
        let mut perms: Vec<Vec<usize>> = vec![(0..k).collect()];
        loop {
            let mut next = perms.last().unwrap().clone();
            // next lexicographic permutation
            let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| next[i] < next[i + 1]) else { break };
            let j = (i + 1..k).rev().find(|&j| next[j] > next[i]).unwrap();
            next.swap(i, j);
            next[i + 1..].reverse();
            perms.push(next);
        }
        let index: BTreeMap<&Vec<usize>, usize> = perms.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let table = perms
            .iter()
            .map(|a| {
                perms
                    .iter()
                    .map(|b| {
                        let ab: Vec<usize> = b.iter().map(|&x| a[x]).collect();
                        index[&ab]
                    })
                    .collect()
            })
            .collect();
        Self::from_table(table).expect("symmetric table")
    }

    pub fn dihedral(n: usize) -> Self {
        // rotations r^i = i, reflections s r^i = n + i
        let m = 2 * n;
        let table = (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| {
                        let (sa, ia) = (a >= n, a % n);
                        let (sb, ib) = (b >= n, b % n);
                        // r^i s = s r^{-i}
                        let exp = if sb { (n + ib - ia) % n } else { (ia + ib) % n };
                        if sa ^ sb {
                            n + exp
                        } else {
                            exp
                        }
                    })
                    .collect()
            })
            .collect();
        Self::from_table(table).expect("dihedral table")
    }

    pub fn direct_product(a: &FiniteGroup, b: &FiniteGroup) -> Self {
        let (n, m) = (a.order, b.order);
        let table =
            (0..n * m).map(|x| (0..n * m).map(|y| a.mul(x / m, y / m) * m + b.mul(x % m, y % m)).collect()).collect();
        Self::from_table(table).expect("product table")
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }
    #[inline]
    pub fn identity(&self) -> usize {
        self.identity
    }
    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }
    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }
    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order
    }
    /// `g h g^{-1}`
    #[inline]
    pub fn conj(&self, g: usize, h: usize) -> usize {
        self.mul(self.mul(g, h), self.inverse[g])
    }

    pub fn table(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.order).map(|r| r.to_vec()).collect()
    }

    pub fn element_order(&self, g: usize) -> usize {
        let mut k = 1;
        let mut x = g;
        while x != self.identity {
            x = self.mul(x, g);
            k += 1;
        }
        k
    }

    pub fn exponent(&self) -> usize {
        self.elements().map(|g| self.element_order(g)).fold(1, lcm)
    }

    pub fn is_abelian(&self) -> bool {
        self.elements().all(|a| self.elements().all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    /// Orbits of conjugation, each sorted, ordered by smallest element.
    pub fn conjugacy_classes(&self) -> Vec<Vec<usize>> {
        let mut class_of = vec![usize::MAX; self.order];
        let mut classes = Vec::new();
        for h in self.elements() {
            if class_of[h] != usize::MAX {
                continue;
            }
            let mut class: Vec<usize> = self.elements().map(|g| self.conj(g, h)).collect();
            class.sort_unstable();
            class.dedup();
            for &k in &class {
                class_of[k] = classes.len();
            }
            classes.push(class);
        }
        classes
    }

    pub fn class_count(&self) -> usize {
        self.conjugacy_classes().len()
    }

    /// The subgroup on a closed set of elements, with its inclusion.
    pub fn subgroup(&self, elements: &[usize]) -> Result<(FiniteGroup, GroupHom)> {
        let mut elems = elements.to_vec();
        elems.sort_unstable();
        elems.dedup();
        let pos: BTreeMap<usize, usize> = elems.iter().enumerate().map(|(i, &g)| (g, i)).collect();
        let mut table = vec![vec![0; elems.len()]; elems.len()];
        for (i, &a) in elems.iter().enumerate() {
            for (j, &b) in elems.iter().enumerate() {
                table[i][j] = *pos
                    .get(&self.mul(a, b))
                    .ok_or_else(|| Error::InvalidGroup(format!("subset not closed: {}*{}", a, b)))?;
            }
        }
        let sub = FiniteGroup::from_table(table)?;
        let inclusion = GroupHom::new(sub.clone(), self.clone(), elems)?;
        Ok((sub, inclusion))
    }

    pub fn centralizer_elements(&self, h: usize) -> Vec<usize> {
        self.elements().filter(|&g| self.mul(g, h) == self.mul(h, g)).collect()
    }

    pub fn centralizer(&self, h: usize) -> (FiniteGroup, GroupHom) {
        self.subgroup(&self.centralizer_elements(h)).expect("centralizer is a subgroup")
    }

    /// Subgroup generated by a set of elements, as a sorted element list.
    pub fn generated(&self, gens: &[usize]) -> Vec<usize> {
        let mut inside = vec![false; self.order];
        inside[self.identity] = true;
        let mut list = vec![self.identity];
        let mut head = 0;
        while head < list.len() {
            let x = list[head];
            for &g in gens {
                let y = self.mul(g, x);
                if !inside[y] {
                    inside[y] = true;
                    list.push(y);
                }
            }
            head += 1;
        }
        list.sort_unstable();
        list
    }

    /// A small generating set of the subgroup on `elements`, chosen greedily.
    pub fn generators_of(&self, elements: &[usize]) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = self.generated(&[]);
        for &g in elements {
            if span.binary_search(&g).is_err() {
                gens.push(g);
                span = self.generated(&gens);
            }
        }
        gens
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// A homomorphism between finite groups, as an element-index array.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupHom {
    domain: FiniteGroup,
    codomain: FiniteGroup,
    map: Vec<usize>,
}

impl GroupHom {
    pub fn new(domain: FiniteGroup, codomain: FiniteGroup, map: Vec<usize>) -> Result<Self> {
        if map.len() != domain.order() {
            return Err(Error::InvalidHom(format!("{} images for a group of order {}", map.len(), domain.order())));
        }
        if let Some(g) = map.iter().position(|&v| v >= codomain.order()) {
            return Err(Error::InvalidHom(format!("image of {} out of range", g)));
        }
        if map[domain.identity()] != codomain.identity() {
            return Err(Error::InvalidHom("identity not preserved".into()));
        }
        for g in domain.elements() {
            for h in domain.elements() {
                if map[domain.mul(g, h)] != codomain.mul(map[g], map[h]) {
                    return Err(Error::InvalidHom(format!("map({}*{}) != map({})*map({})", g, h, g, h)));
                }
            }
        }
        Ok(GroupHom { domain, codomain, map })
    }

    pub fn identity(g: &FiniteGroup) -> Self {
        GroupHom { domain: g.clone(), codomain: g.clone(), map: g.elements().collect() }
    }

    #[inline]
    pub fn apply(&self, g: usize) -> usize {
        self.map[g]
    }
    pub fn domain(&self) -> &FiniteGroup {
        &self.domain
    }
    pub fn codomain(&self) -> &FiniteGroup {
        &self.codomain
    }
    pub fn images(&self) -> &[usize] {
        &self.map
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.codomain.order()];
        self.map.iter().all(|&v| !std::mem::replace(&mut seen[v], true))
    }

    pub fn is_bijective(&self) -> bool {
        self.is_injective() && self.domain.order() == self.codomain.order()
    }

    /// `other ∘ self`
    pub fn then(&self, other: &GroupHom) -> Result<GroupHom> {
        if self.codomain != other.domain {
            return Err(Error::InvalidHom("composition of non-composable homomorphisms".into()));
        }
        Ok(GroupHom {
            domain: self.domain.clone(),
            codomain: other.codomain.clone(),
            map: self.map.iter().map(|&g| other.map[g]).collect(),
        })
    }

    /// Preimage of `g`, if any (first by index).
    pub fn preimage(&self, g: usize) -> Option<usize> {
        self.map.iter().position(|&v| v == g)
    }
}

pub const PRIME_SEARCH_CAP: u64 = 1_000_000;

/// Smallest prime `p` with `p ∤ |G|` and `p ≡ 1 (mod exp G)`.
pub fn splitting_prime(g: &FiniteGroup) -> Result<u32> {
    let n = g.order() as u64;
    let e = g.exponent() as u64;
    (2..PRIME_SEARCH_CAP)
        .find(|&p| is_prime(p) && !n.is_multiple_of(p) && p % e == 1 % e)
        .map(|p| p as u32)
        .ok_or(Error::PrimeSearchExhausted(PRIME_SEARCH_CAP))
}

/// Checks that `F_p` is a semisimple splitting field for `g`.
pub fn check_splitting(g: &FiniteGroup, p: u32) -> Result<()> {
    if !is_prime(p as u64) {
        return Err(Error::NotPrime(p as u64));
    }
    if (g.order() as u64).is_multiple_of(p as u64) {
        return Err(Error::NotSplitting { p, reason: format!("p divides |G| = {}", g.order()) });
    }
    let e = g.exponent() as u32;
    if p % e != 1 % e {
        return Err(Error::NotSplitting { p, reason: format!("p is not 1 mod the exponent {}", e) });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s3() -> FiniteGroup {
        FiniteGroup::symmetric(3)
    }

    // S3 in lexicographic order: 0 = e, 1 = (12), 2 = (01), 3 = (012), 4 = (021), 5 = (02)
    fn s3_transposition() -> usize {
        let g = s3();
        g.elements().find(|&x| x != g.identity() && g.element_order(x) == 2).unwrap()
    }

    #[test]
    fn class_sizes() {
        assert_eq!(FiniteGroup::cyclic(2).conjugacy_classes(), vec![vec![0], vec![1]]);
        assert_eq!(FiniteGroup::cyclic(4).class_count(), 4);
        let mut sizes: Vec<usize> = s3().conjugacy_classes().iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2, 3]);
    }

    #[test]
    fn centralizer_orders() {
        let g = s3();
        assert_eq!(g.centralizer(g.identity()).0.order(), 6);
        assert_eq!(g.centralizer(s3_transposition()).0.order(), 2);
        let three = g.elements().find(|&x| g.element_order(x) == 3).unwrap();
        assert_eq!(g.centralizer(three).0.order(), 3);
    }

    #[test]
    fn splitting_primes() {
        assert_eq!(splitting_prime(&FiniteGroup::cyclic(2)).unwrap(), 3);
        assert_eq!(splitting_prime(&s3()).unwrap(), 7);
        assert_eq!(splitting_prime(&FiniteGroup::trivial()).unwrap(), 2);
        assert_eq!(splitting_prime(&FiniteGroup::cyclic(3)).unwrap(), 7);
        assert_eq!(splitting_prime(&FiniteGroup::cyclic(4)).unwrap(), 5);
        assert!(check_splitting(&s3(), 5).is_err());
        assert!(check_splitting(&s3(), 13).is_ok());
    }

    #[test]
    fn bad_tables_rejected() {
        let err = FiniteGroup::from_table(vec![vec![0, 1], vec![1, 1]]).unwrap_err();
        assert!(matches!(err, Error::InvalidGroup(_)));
        // a Latin square with identity that is not associative
        let t = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        let err = FiniteGroup::from_table(t).unwrap_err();
        assert!(err.to_string().contains("associativity"), "{err}");
    }

    #[test]
    fn hom_validation_finds_witness() {
        let z4 = FiniteGroup::cyclic(4);
        let z2 = FiniteGroup::cyclic(2);
        assert!(GroupHom::new(z4.clone(), z2.clone(), vec![0, 1, 0, 1]).is_ok());
        let err = GroupHom::new(z4, z2, vec![0, 1, 1, 0]).unwrap_err();
        assert!(matches!(err, Error::InvalidHom(_)));
    }

    #[test]
    fn permutation_closure_matches_symmetric() {
        let (g, elems, words) = FiniteGroup::from_permutations(&[vec![1, 0, 2], vec![1, 2, 0]]).unwrap();
        assert_eq!(g.order(), 6);
        assert_eq!(elems.len(), words.len());
        assert!(!g.is_abelian());
        assert_eq!(g.class_count(), 3);
    }

    #[test]
    fn dihedral_and_products() {
        let d4 = FiniteGroup::dihedral(4);
        assert_eq!(d4.order(), 8);
        assert_eq!(d4.class_count(), 5);
        let v = FiniteGroup::direct_product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(2));
        assert!(v.is_abelian());
        assert_eq!(v.exponent(), 2);
    }

    #[test]
    fn orbit_stabilizer_for_every_element() {
        for g in [s3(), FiniteGroup::dihedral(4), FiniteGroup::cyclic(6)] {
            let classes = g.conjugacy_classes();
            assert_eq!(classes.iter().map(Vec::len).sum::<usize>(), g.order());
            for class in &classes {
                assert_eq!(g.order() % class.len(), 0);
                for &h in class {
                    assert_eq!(g.centralizer(h).0.order() * class.len(), g.order());
                }
            }
        }
    }
}
