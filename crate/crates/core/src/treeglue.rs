//! Finite models of two gluings of the rooted binary tree.
//!
//! Vertices are heap ids (root 1, children `2v` for L and `2v + 1` for R).
//! Each edge carries a dyadic grid of `2^g` steps. A grid point is a node id
//! plus a fraction: fraction 0 is the vertex itself, fraction `j > 0` is the
//! point `j / 2^g` of the way down the edge from the parent into the node.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DEPTH: u32 = 12;
pub const MAX_RESOLUTION: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gluing {
    /// `[v, vLLL...)` glued to `[v, vRRR...)` preserving depth.
    A,
    /// `[v, vLRRR...)` glued to `[v, vRLRRR...)`, doubling the first edge.
    B,
}

impl FromStr for Gluing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Gluing::A),
            "B" | "b" => Ok(Gluing::B),
            _ => Err(Error::SceneFile(format!("unknown gluing {s:?}"))),
        }
    }
}

/// A point of the tree: the vertex `v0·word`, or, when `tail > 0`, the point
/// `tail / 2^resolution` along the edge from the parent of `word` into `word`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreePoint {
    pub word: String,
    pub tail: u32,
    pub resolution: u32,
}

impl TreePoint {
    pub fn vertex(word: &str, resolution: u32) -> Self {
        TreePoint {
            word: word.to_string(),
            tail: 0,
            resolution,
        }
    }

    fn node(&self) -> u64 {
        self.word
            .bytes()
            .fold(1u64, |n, c| 2 * n + u64::from(c == b'R'))
    }

    fn from_node(node: u64, frac: u32, resolution: u32) -> Self {
        let depth = depth_of(node);
        let word = (0..depth)
            .rev()
            .map(|i| if (node >> i) & 1 == 1 { 'R' } else { 'L' })
            .collect();
        TreePoint {
            word,
            tail: frac,
            resolution,
        }
    }
}

impl fmt::Display for TreePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.tail == 0 {
            return write!(f, "v0{}", self.word);
        }
        let (head, last) = self.word.split_at(self.word.len() - 1);
        let mut num = self.tail;
        let mut den = 1u32 << self.resolution;
        while num.is_multiple_of(2) {
            num /= 2;
            den /= 2;
        }
        write!(f, "v0{head}{last}^{num}/{den}")
    }
}

/// Parses `v0RLL` or `v0LR^1/2`; the tail must fit the given resolution.
pub fn parse_point(s: &str, resolution: u32) -> Result<TreePoint> {
    let bad = || Error::SceneFile(format!("bad tree point {s:?}"));
    let body = s.strip_prefix("v0").ok_or_else(bad)?;
    let (word, tail) = match body.split_once('^') {
        None => (body, 0),
        Some((w, frac)) => {
            let (n, d) = frac.split_once('/').ok_or_else(bad)?;
            let n: u32 = n.parse().map_err(|_| bad())?;
            let d: u32 = d.parse().map_err(|_| bad())?;
            let full = 1u32 << resolution;
            if d == 0 || !d.is_power_of_two() || d > full || n == 0 || n >= d || w.is_empty() {
                return Err(bad());
            }
            (w, n * (full / d))
        }
    };
    if !word.bytes().all(|c| c == b'L' || c == b'R') {
        return Err(bad());
    }
    Ok(TreePoint {
        word: word.to_string(),
        tail,
        resolution,
    })
}

fn depth_of(node: u64) -> u32 {
    63 - node.leading_zeros()
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        // Keep the smaller index as root so roots are shallow points.
        if ra < rb {
            self.parent[rb as usize] = ra;
        } else if rb < ra {
            self.parent[ra as usize] = rb;
        }
    }
}

/// The quotient of the truncated tree by a gluing, with its induced order.
#[derive(Debug, Clone)]
pub struct TreeQuotient {
    pub gluing: Gluing,
    pub depth: u32,
    pub resolution: u32,
    class_of: Vec<u32>,
    members: Vec<Vec<u32>>,
    children: Vec<Vec<u32>>,
    topo: Vec<u32>,
}

/// Ancestor claim evaluation for one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub a: String,
    pub b: String,
    pub literal: bool,
    pub closed: bool,
    pub brute_force: bool,
    /// Closed reading against brute force.
    pub agree: bool,
    pub literal_agree: bool,
    /// Canonical points from `a` down to one that is a tree ancestor of `b`.
    pub witness: Option<Vec<String>>,
}

/// Agreement counts of the ancestor criterion over random pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimSurvey {
    pub pairs: usize,
    pub pool: usize,
    pub related: usize,
    pub closed_agree: usize,
    pub literal_agree: usize,
    pub disagreements: Vec<ClaimCheck>,
}

impl TreeQuotient {
    fn grid(&self) -> u32 {
        1 << self.resolution
    }

    fn index(&self, node: u64, frac: u32) -> u32 {
        ((node - 1) * self.grid() as u64 + frac as u64) as u32
    }

    fn split(&self, idx: u32) -> (u64, u32) {
        let g = self.grid();
        (idx as u64 / g as u64 + 1, idx % g)
    }

    /// Depth of a grid point in grid steps.
    fn depth_units(&self, node: u64, frac: u32) -> u64 {
        let d = depth_of(node) as u64 * self.grid() as u64;
        if frac == 0 {
            d
        } else {
            d - self.grid() as u64 + frac as u64
        }
    }

    fn valid(&self, idx: u32) -> bool {
        let (node, frac) = self.split(idx);
        depth_of(node) <= self.depth && !(node == 1 && frac > 0)
    }

    fn point_index(&self, p: &TreePoint) -> Result<u32> {
        let node = p.node();
        if p.resolution != self.resolution
            || p.tail >= self.grid()
            || (p.word.is_empty() && p.tail > 0)
        {
            return Err(Error::SceneFile(format!(
                "point {p} does not match the grid"
            )));
        }
        if depth_of(node) > self.depth {
            return Err(Error::TruncationBoundary(p.to_string()));
        }
        Ok(self.index(node, p.tail))
    }

    fn point(&self, idx: u32) -> TreePoint {
        let (node, frac) = self.split(idx);
        TreePoint::from_node(node, frac, self.resolution)
    }

    /// The point `t` grid steps below `v` along the path whose `k`-th letter is `letter(k)`.
    fn along(&self, v: u64, letter: impl Fn(u64) -> bool, t: u64) -> Option<u32> {
        let g = self.grid() as u64;
        let (m, r) = (t / g, (t % g) as u32);
        let mut node = v;
        for k in 0..m {
            node = 2 * node + u64::from(letter(k));
        }
        if r > 0 {
            node = 2 * node + u64::from(letter(m));
        }
        (depth_of(node) <= self.depth).then(|| self.index(node, r))
    }

    pub fn class_count(&self) -> usize {
        self.members.len()
    }

    pub fn class_of(&self, p: &TreePoint) -> Result<usize> {
        Ok(self.class_of[self.point_index(p)? as usize] as usize)
    }

    pub fn members(&self, class: usize) -> Vec<TreePoint> {
        self.members[class].iter().map(|&i| self.point(i)).collect()
    }

    pub fn same_class(&self, a: &TreePoint, b: &TreePoint) -> Result<bool> {
        Ok(self.class_of(a)? == self.class_of(b)?)
    }

    /// Whether `[a]` is an ancestor of `[b]` in the quotient.
    pub fn quotient_ancestor(&self, a: &TreePoint, b: &TreePoint) -> Result<bool> {
        let (ca, cb) = (self.class_of(a)?, self.class_of(b)?);
        Ok(self.reaches(ca as u32, cb as u32))
    }

    fn reaches(&self, from: u32, to: u32) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.members.len()];
        let mut stack = vec![from];
        seen[from as usize] = true;
        while let Some(c) = stack.pop() {
            for &n in &self.children[c as usize] {
                if n == to {
                    return true;
                }
                if !seen[n as usize] {
                    seen[n as usize] = true;
                    stack.push(n);
                }
            }
        }
        false
    }

    pub fn comparable(&self, a: &TreePoint, b: &TreePoint) -> Result<bool> {
        Ok(self.quotient_ancestor(a, b)? || self.quotient_ancestor(b, a)?)
    }

    /// A DAG's reachability order is total exactly when consecutive classes
    /// in topological order are joined by an edge.
    pub fn is_total_order(&self) -> bool {
        self.topo
            .windows(2)
            .all(|w| self.children[w[0] as usize].contains(&w[1]))
    }

    /// The gluing-B canonical member of the class of `p`.
    pub fn canonical_rep(&self, p: &TreePoint) -> Result<TreePoint> {
        if self.gluing != Gluing::B {
            return Err(Error::WrongGluing);
        }
        let class = self.class_of(p)?;
        let forms: Vec<TreePoint> = self
            .members(class)
            .into_iter()
            .filter(|m| canonical_form(m).is_some())
            .collect();
        match forms.as_slice() {
            [one] => Ok(one.clone()),
            [] => Err(Error::TruncationBoundary(p.to_string())),
            many => Err(Error::TruncationBoundary(format!(
                "{p} has {} canonical members",
                many.len()
            ))),
        }
    }

    /// Grid points in canonical form whose node depth is at most `max_depth`.
    pub fn canonical_points(&self, max_depth: u32) -> Vec<TreePoint> {
        (0..self.class_of.len() as u32)
            .filter(|&i| self.valid(i) && depth_of(self.split(i).0) <= max_depth)
            .map(|i| self.point(i))
            .filter(|p| canonical_form(p).is_some())
            .collect()
    }

    /// Evaluates the ancestor criterion for canonical representatives and
    /// compares it with reachability in the quotient.
    ///
    /// Two readings are evaluated. The literal one asks that the points named
    /// in the second and third cases be tree ancestors of `b`. The closed one
    /// asks that they be quotient ancestors, evaluated by the same criterion.
    pub fn check_ancestor_claim(&self, a: &TreePoint, b: &TreePoint) -> Result<ClaimCheck> {
        if self.gluing != Gluing::B {
            return Err(Error::WrongGluing);
        }
        canonical_form(a).ok_or_else(|| Error::TruncationBoundary(a.to_string()))?;
        let ib = self.point_index(b)?;
        let ia = self.point_index(a)?;
        let literal = self.criterion(ia, ib, false, &mut HashMap::new()).is_some();
        let witness = self.criterion(ia, ib, true, &mut HashMap::new());
        let brute_force = self.quotient_ancestor(a, b)?;
        let closed = witness.is_some();
        Ok(ClaimCheck {
            a: a.to_string(),
            b: b.to_string(),
            literal,
            closed,
            brute_force,
            agree: closed == brute_force,
            literal_agree: literal == brute_force,
            witness: witness.map(|w| w.into_iter().map(|i| self.point(i).to_string()).collect()),
        })
    }

    /// Chain of canonical points from `a` ending at a tree ancestor of `b`.
    fn criterion(
        &self,
        a: u32,
        b: u32,
        closed: bool,
        memo: &mut HashMap<u32, Option<Vec<u32>>>,
    ) -> Option<Vec<u32>> {
        if let Some(known) = memo.get(&a) {
            return known.clone();
        }
        memo.insert(a, None);
        let found = self.criterion_step(a, b, closed, memo).map(|mut rest| {
            rest.insert(0, a);
            rest
        });
        memo.insert(a, found.clone());
        found
    }

    fn criterion_step(
        &self,
        a: u32,
        b: u32,
        closed: bool,
        memo: &mut HashMap<u32, Option<Vec<u32>>>,
    ) -> Option<Vec<u32>> {
        if self.tree_ancestor(a, b) {
            return Some(Vec::new());
        }
        let (w, s_units) = canonical_form(&self.point(a))?;
        let g = self.grid() as u64;
        let depth_b = depth_of(self.split(b).0);
        let vertex = |word: String| -> Option<u32> {
            let v = TreePoint::vertex(&word, self.resolution);
            (depth_of(v.node()) <= depth_b).then(|| self.index(v.node(), 0))
        };
        let candidates: Vec<u32> = if w.is_empty() {
            (0..=(s_units / g) as usize)
                .filter_map(|n| vertex(format!("{}L", "R".repeat(n))))
                .collect()
        } else if let Some(head) = w.strip_suffix('L') {
            (0..=self.depth as usize)
                .filter_map(|k| vertex(format!("{head}{}LL", "R".repeat(k))))
                .collect()
        } else {
            Vec::new()
        };
        for c in candidates {
            if !closed {
                if self.tree_ancestor(c, b) {
                    return Some(vec![c]);
                }
                continue;
            }
            // v0 R^n L is not canonical; its class is that of v0 L.
            let c = if w.is_empty() { self.index(2, 0) } else { c };
            if let Some(chain) = self.criterion(c, b, true, memo) {
                return Some(chain);
            }
        }
        None
    }

    /// Checks the ancestor criterion on seeded random pairs of canonical points.
    ///
    /// Witness chains run about twice as deep as their endpoints, so points are
    /// drawn within depth `depth / 2 + 1` to keep the chains inside the truncation.
    pub fn claim_survey(&self, pairs: usize, seed: u64) -> Result<ClaimSurvey> {
        let pool = self.canonical_points(self.depth / 2 + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut survey = ClaimSurvey {
            pairs,
            pool: pool.len(),
            related: 0,
            closed_agree: 0,
            literal_agree: 0,
            disagreements: Vec::new(),
        };
        for _ in 0..pairs {
            let a = &pool[rng.gen_range(0..pool.len())];
            let b = &pool[rng.gen_range(0..pool.len())];
            let c = self.check_ancestor_claim(a, b)?;
            survey.related += usize::from(c.brute_force);
            survey.closed_agree += usize::from(c.agree);
            survey.literal_agree += usize::from(c.literal_agree);
            if !(c.agree && c.literal_agree) {
                survey.disagreements.push(c);
            }
        }
        Ok(survey)
    }

    /// Whether grid point `a` lies on the root path of `b` in the tree.
    fn tree_ancestor(&self, a: u32, b: u32) -> bool {
        let (na, fa) = self.split(a);
        let (nb, fb) = self.split(b);
        let (ta, tb) = (self.depth_units(na, fa), self.depth_units(nb, fb));
        if ta > tb {
            return false;
        }
        let g = self.grid() as u64;
        let (q, r) = ((ta / g) as u32, (ta % g) as u32);
        let db = depth_of(nb);
        let up = if r == 0 { db - q } else { db - q - 1 };
        (nb >> up, r) == (na, fa)
    }

    /// Checks that prefixing an L maps classes to classes.
    pub fn shift_equivariant(&self) -> bool {
        let g = self.grid() as u64;
        let limit = (self.depth as u64 - 1) * g;
        let shift = |idx: u32| {
            let (node, frac) = self.split(idx);
            self.index(node + (1u64 << depth_of(node)), frac)
        };
        (0..self.class_of.len() as u32)
            .filter(|&i| self.valid(i))
            .filter(|&i| {
                let (n, f) = self.split(i);
                self.depth_units(n, f) <= limit
            })
            .all(|i| {
                let root = self.members[self.class_of[i as usize] as usize][0];
                self.class_of[shift(i) as usize] == self.class_of[shift(root) as usize]
            })
    }

    /// The class DAG in DOT format, each class labelled by its shallowest member.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph quotient {\n");
        for (c, m) in self.members.iter().enumerate() {
            out.push_str(&format!("  c{c} [label=\"{}\"];\n", self.point(m[0])));
        }
        for (c, next) in self.children.iter().enumerate() {
            for n in next {
                out.push_str(&format!("  c{c} -> c{n};\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Splits `p = v0 W R^s` with `s` maximal; `Some((W, s in grid steps))` when
/// `W` is empty, `L`, or ends in `LL`.
fn canonical_form(p: &TreePoint) -> Option<(String, u64)> {
    let g = 1u64 << p.resolution;
    let mut word = p.word.as_str();
    let mut s = 0u64;
    if p.tail > 0 {
        word = word.strip_suffix('R')?;
        s += p.tail as u64;
    }
    while let Some(w) = word.strip_suffix('R') {
        word = w;
        s += g;
    }
    (word.is_empty() || word == "L" || word.ends_with("LL")).then(|| (word.to_string(), s))
}

/// Builds the quotient of the tree truncated at `depth` with `2^resolution` grid steps per edge.
pub fn build_quotient(gluing: Gluing, depth: u32, resolution: u32) -> Result<TreeQuotient> {
    if depth > MAX_DEPTH || resolution > MAX_RESOLUTION || depth == 0 {
        return Err(Error::TreeTooLarge { depth, resolution });
    }
    // The vertex vR on the doubled path is the image of the midpoint of [v, vL].
    if gluing == Gluing::B && resolution == 0 {
        return Err(Error::ResolutionMismatch(resolution));
    }
    let nodes = (1u64 << (depth + 1)) - 1;
    let g = 1u64 << resolution;
    let size = (nodes * g) as usize;
    let mut q = TreeQuotient {
        gluing,
        depth,
        resolution,
        class_of: Vec::new(),
        members: Vec::new(),
        children: Vec::new(),
        topo: Vec::new(),
    };
    let mut uf = UnionFind::new(size);
    for v in 1..=nodes {
        let room = (depth - depth_of(v)) as u64 * g;
        match gluing {
            Gluing::A => {
                for t in 1..=room {
                    let l = q.along(v, |_| false, t);
                    let r = q.along(v, |_| true, t);
                    if let (Some(l), Some(r)) = (l, r) {
                        uf.union(l, r);
                    }
                }
            }
            Gluing::B => {
                for t in 1..=room {
                    let image = if t <= g { 2 * t } else { t + g };
                    let l = q.along(v, |k| k > 0, t);
                    let r = q.along(v, |k| k != 1, image);
                    match (l, r) {
                        (Some(l), Some(r)) => uf.union(l, r),
                        _ => break,
                    }
                }
            }
        }
    }
    let mut class_of = vec![u32::MAX; size];
    let mut root_class = vec![u32::MAX; size];
    let mut members: Vec<Vec<u32>> = Vec::new();
    for i in 0..size as u32 {
        if !q.valid(i) {
            continue;
        }
        let r = uf.find(i) as usize;
        if root_class[r] == u32::MAX {
            root_class[r] = members.len() as u32;
            members.push(Vec::new());
        }
        class_of[i as usize] = root_class[r];
        members[root_class[r] as usize].push(i);
    }
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); members.len()];
    for i in 1..size as u32 {
        if !q.valid(i) {
            continue;
        }
        let (node, frac) = q.split(i);
        let parent = match frac {
            0 if g > 1 => q.index(node, (g - 1) as u32),
            0 | 1 => q.index(node / 2, 0),
            f => q.index(node, f - 1),
        };
        let (cp, ci) = (class_of[parent as usize], class_of[i as usize]);
        if cp != ci && !children[cp as usize].contains(&ci) {
            children[cp as usize].push(ci);
        }
    }
    q.topo = topological_order(&children)?;
    q.class_of = class_of;
    q.members = members;
    q.children = children;
    Ok(q)
}

/// Kahn's algorithm; fails on a cycle.
fn topological_order(children: &[Vec<u32>]) -> Result<Vec<u32>> {
    let mut indegree = vec![0usize; children.len()];
    for next in children {
        for &n in next {
            indegree[n as usize] += 1;
        }
    }
    let mut ready: VecDeque<u32> = (0..children.len() as u32)
        .filter(|&c| indegree[c as usize] == 0)
        .collect();
    let mut order = Vec::with_capacity(children.len());
    while let Some(c) = ready.pop_front() {
        order.push(c);
        for &n in &children[c as usize] {
            indegree[n as usize] -= 1;
            if indegree[n as usize] == 0 {
                ready.push_back(n);
            }
        }
    }
    if order.len() != children.len() {
        return Err(Error::OrderCycle);
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gluing_a_collapses_to_a_ray() {
        let q = build_quotient(Gluing::A, 8, 2).unwrap();
        assert_eq!(q.class_count(), 8 * 4 + 1);
        assert!(q.is_total_order());
        assert!(q.shift_equivariant());
    }

    #[test]
    fn spine_points_are_identified() {
        let q = build_quotient(Gluing::B, 8, 2).unwrap();
        let first = TreePoint::vertex("L", 2);
        for n in 1..=5 {
            let p = TreePoint::vertex(&format!("{}L", "R".repeat(n)), 2);
            assert!(q.same_class(&first, &p).unwrap(), "n = {n}");
        }
    }

    #[test]
    fn branches_are_incomparable() {
        let q = build_quotient(Gluing::B, 8, 2).unwrap();
        let a = TreePoint::vertex("LL", 2);
        let b = TreePoint::vertex("RLL", 2);
        assert!(!q.comparable(&a, &b).unwrap());
        // Both lie below v0 L R^s for any s.
        let c = parse_point("v0LR^1/2", 2).unwrap();
        assert!(q.quotient_ancestor(&c, &a).unwrap());
        assert!(q.quotient_ancestor(&c, &b).unwrap());
    }

    #[test]
    fn canonical_representatives() {
        let q = build_quotient(Gluing::B, 8, 2).unwrap();
        let p = TreePoint::vertex("RLL", 2);
        assert_eq!(q.canonical_rep(&p).unwrap(), p);
        let root = TreePoint::vertex("", 2);
        assert_eq!(q.canonical_rep(&root).unwrap(), root);
        let glued = TreePoint::vertex("RLRRR", 2);
        assert_eq!(
            q.canonical_rep(&glued).unwrap(),
            TreePoint::vertex("LRRR", 2)
        );
    }

    #[test]
    fn point_text_round_trip() {
        for s in ["v0", "v0RLL", "v0LR^1/2", "v0RR^3/4"] {
            assert_eq!(parse_point(s, 2).unwrap().to_string(), s);
        }
        assert!(parse_point("v0LR^1/8", 2).is_err());
        assert!(parse_point("RL", 2).is_err());
    }

    #[test]
    fn resolution_is_enforced() {
        assert_eq!(
            build_quotient(Gluing::B, 4, 0).unwrap_err(),
            Error::ResolutionMismatch(0)
        );
        assert!(build_quotient(Gluing::A, 13, 1).is_err());
    }
}
