//! Combinatorial maps (ribbon graphs) with cilia: face traversal, Euler
//! characteristic and genus, spanning trees, LVR graphs, and the bounded
//! enumeration of the model's ciliated Wick diagrams.
//!
//! Two graph flavours live here.
//!
//! * [`RibbonMap`] is the geometric object: a rotation system with an edge
//!   involution and unpaired cilium half-edges (at most one per vertex).
//! * [`CiliatedDiagram`] is a Wick-contraction diagram of the interaction
//!   Tr (MM†)^p with k external source pairs. Each interaction vertex carries
//!   2p half-edge slots with alternating M / M† orientation; a cilium is one
//!   external (M, M†) pair. One power of λ is attached to each interaction
//!   vertex, so `max_edges` in [`enumerate_ciliated_maps`] bounds the
//!   expansion order.

use std::collections::HashMap;

use crate::weingarten::{IntegerPartition, Permutation};
use crate::{Error, Result};

/// Rotation system with cilia.
///
/// Half-edges are indexed 0..h; `rot_next` is the cyclic successor at the
/// same vertex, `pairing[h] = None` marks a cilium.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RibbonMap {
    pub n_vertices: usize,
    pub vertex_of: Vec<usize>,
    pub rot_next: Vec<usize>,
    pub pairing: Vec<Option<usize>>,
}

/// Face decomposition: orbits of the next-corner map, with broken faces
/// (those whose orbit contains a cilium) singled out.
#[derive(Debug, Clone)]
pub struct FaceStructure {
    /// Cyclic half-edge orbits; isolated vertices contribute an empty orbit.
    pub faces: Vec<Vec<usize>>,
    /// Indices into `faces` of the broken faces.
    pub broken: Vec<usize>,
    /// Cilia per face, aligned with `faces`; sums to the number of cilia.
    pub cilia_per_face: Vec<usize>,
}

impl RibbonMap {
    pub fn new(
        n_vertices: usize,
        vertex_of: Vec<usize>,
        rot_next: Vec<usize>,
        pairing: Vec<Option<usize>>,
    ) -> Result<Self> {
        let map = RibbonMap {
            n_vertices,
            vertex_of,
            rot_next,
            pairing,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn h(&self) -> usize {
        self.vertex_of.len()
    }

    fn validate(&self) -> Result<()> {
        let h = self.h();
        if self.rot_next.len() != h || self.pairing.len() != h {
            return Err(Error::MalformedMap("array lengths disagree".into()));
        }
        for (he, &v) in self.vertex_of.iter().enumerate() {
            if v >= self.n_vertices {
                return Err(Error::MalformedMap(format!(
                    "half-edge {he} has bad vertex"
                )));
            }
        }
        // rotation orbits partition half-edges by vertex
        let mut seen = vec![false; h];
        for start in 0..h {
            if seen[start] {
                continue;
            }
            let v = self.vertex_of[start];
            let mut cur = start;
            loop {
                if self.rot_next[cur] >= h {
                    return Err(Error::MalformedMap("rotation out of range".into()));
                }
                if self.vertex_of[cur] != v {
                    return Err(Error::MalformedMap(
                        "rotation orbit crosses vertices".into(),
                    ));
                }
                seen[cur] = true;
                cur = self.rot_next[cur];
                if cur == start {
                    break;
                }
                if seen[cur] {
                    return Err(Error::MalformedMap("rotation is not a permutation".into()));
                }
            }
        }
        // pairing is a fixed-point-free involution on non-cilium half-edges
        for he in 0..h {
            match self.pairing[he] {
                Some(other) => {
                    if other >= h || other == he || self.pairing[other] != Some(he) {
                        return Err(Error::MalformedMap(format!(
                            "pairing not an involution at {he}"
                        )));
                    }
                }
                None => {}
            }
        }
        // at most one cilium per vertex
        let mut cilia = vec![0usize; self.n_vertices];
        for he in 0..h {
            if self.pairing[he].is_none() {
                cilia[self.vertex_of[he]] += 1;
            }
        }
        if cilia.iter().any(|&c| c > 1) {
            return Err(Error::MalformedMap(
                "more than one cilium on a vertex".into(),
            ));
        }
        Ok(())
    }

    pub fn n_edges(&self) -> usize {
        self.pairing.iter().filter(|p| p.is_some()).count() / 2
    }

    pub fn n_cilia(&self) -> usize {
        self.pairing.iter().filter(|p| p.is_none()).count()
    }

    /// Next half-edge of the face walk: rotation after the edge involution,
    /// cilia acting as fixed points of the involution.
    fn face_next(&self, he: usize) -> usize {
        match self.pairing[he] {
            Some(other) => self.rot_next[other],
            None => self.rot_next[he],
        }
    }

    /// Face orbits of the next-corner traversal.
    pub fn faces(&self) -> FaceStructure {
        let h = self.h();
        let mut seen = vec![false; h];
        let mut faces = Vec::new();
        for start in 0..h {
            if seen[start] {
                continue;
            }
            let mut orbit = Vec::new();
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                orbit.push(cur);
                cur = self.face_next(cur);
            }
            faces.push(orbit);
        }
        // isolated vertices carry one empty face each
        let mut has_edge = vec![false; self.n_vertices];
        for &v in &self.vertex_of {
            has_edge[v] = true;
        }
        for _ in has_edge.iter().filter(|&&b| !b) {
            faces.push(Vec::new());
        }
        let cilia_per_face: Vec<usize> = faces
            .iter()
            .map(|orbit| {
                orbit
                    .iter()
                    .filter(|&&he| self.pairing[he].is_none())
                    .count()
            })
            .collect();
        let broken = cilia_per_face
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| i)
            .collect();
        FaceStructure {
            faces,
            broken,
            cilia_per_face,
        }
    }

    pub fn is_connected(&self) -> bool {
        if self.n_vertices == 0 {
            return true;
        }
        let mut dsu = Dsu::new(self.n_vertices);
        for he in 0..self.h() {
            if let Some(other) = self.pairing[he] {
                dsu.union(self.vertex_of[he], self.vertex_of[other]);
            }
        }
        let root = dsu.find(0);
        (1..self.n_vertices).all(|v| dsu.find(v) == root)
    }

    /// Euler characteristic χ = v - e + f - b, genus g from χ = 2 - 2g - b,
    /// and the broken-face count b. Requires a connected map.
    pub fn euler_characteristic(&self) -> Result<(i64, i64, usize)> {
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        let fs = self.faces();
        let b = fs.broken.len();
        let chi = self.n_vertices as i64 - self.n_edges() as i64 + fs.faces.len() as i64 - b as i64;
        let two_g = 2 - b as i64 - chi;
        if two_g < 0 || two_g % 2 != 0 {
            return Err(Error::MalformedMap(format!(
                "no integer genus: chi = {chi}, b = {b}"
            )));
        }
        Ok((chi, two_g / 2, b))
    }

    /// Undirected edge list (vertex pairs), one entry per ribbon edge.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for he in 0..self.h() {
            if let Some(other) = self.pairing[he] {
                if he < other {
                    edges.push((self.vertex_of[he], self.vertex_of[other]));
                }
            }
        }
        edges
    }

    /// All spanning trees as sorted edge-index subsets.
    pub fn spanning_trees(&self) -> Result<Vec<Vec<usize>>> {
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        let edges = self.edge_list();
        let v = self.n_vertices;
        if v == 1 {
            return Ok(vec![Vec::new()]);
        }
        let need = v - 1;
        let mut out = Vec::new();
        let mut choice: Vec<usize> = (0..need).collect();
        if edges.len() < need {
            return Ok(out);
        }
        loop {
            let mut dsu = Dsu::new(v);
            let mut acyclic = true;
            for &e in &choice {
                let (a, b) = edges[e];
                if !dsu.union(a, b) {
                    acyclic = false;
                    break;
                }
            }
            if acyclic {
                let root = dsu.find(0);
                if (1..v).all(|w| dsu.find(w) == root) {
                    out.push(choice.clone());
                }
            }
            // next combination
            let mut i = need;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                if choice[i] != i + edges.len() - need {
                    choice[i] += 1;
                    for j in i + 1..need {
                        choice[j] = choice[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Canonical encoding, invariant under vertex relabelling and half-edge
    /// renaming: lexicographically minimal BFS code over all starting
    /// half-edges.
    pub fn canonical_code(&self) -> Vec<i64> {
        let h = self.h();
        if h == 0 {
            return vec![self.n_vertices as i64];
        }
        let mut best: Option<Vec<i64>> = None;
        for start in 0..h {
            let code = self.bfs_code(start, false);
            if best.as_ref().map_or(true, |b| code < *b) {
                best = Some(code);
            }
        }
        best.unwrap()
    }

    /// Canonical encoding with vertex labels fixed (invariant only under
    /// half-edge renaming); identifies labelled maps.
    pub fn labelled_code(&self) -> Vec<i64> {
        let h = self.h();
        if h == 0 {
            return vec![self.n_vertices as i64];
        }
        let mut best: Option<Vec<i64>> = None;
        for start in 0..h {
            let code = self.bfs_code(start, true);
            if best.as_ref().map_or(true, |b| code < *b) {
                best = Some(code);
            }
        }
        best.unwrap()
    }

    fn bfs_code(&self, start: usize, with_labels: bool) -> Vec<i64> {
        // Assign discovery ids by walking rotation orbits from a root corner,
        // following pairings breadth-first.
        let h = self.h();
        let mut id = vec![usize::MAX; h];
        let mut queue = std::collections::VecDeque::new();
        let mut next_id = 0usize;
        let assign_orbit = |root: usize, id: &mut Vec<usize>, next_id: &mut usize| {
            let mut orbit = vec![root];
            let mut cur = self.rot_next[root];
            while cur != root {
                orbit.push(cur);
                cur = self.rot_next[cur];
            }
            for he in orbit {
                id[he] = *next_id;
                *next_id += 1;
            }
        };
        assign_orbit(start, &mut id, &mut next_id);
        queue.push_back(start);
        let mut code = Vec::new();
        let mut visited_vertex = vec![false; self.n_vertices];
        visited_vertex[self.vertex_of[start]] = true;
        while let Some(seed) = queue.pop_front() {
            // walk the orbit in rotation order, emitting partner ids
            if with_labels {
                code.push(-9 - self.vertex_of[seed] as i64);
            }
            let mut cur = seed;
            loop {
                match self.pairing[cur] {
                    None => code.push(-1),
                    Some(other) => {
                        if id[other] == usize::MAX {
                            let v = self.vertex_of[other];
                            if !visited_vertex[v] {
                                visited_vertex[v] = true;
                            }
                            assign_orbit(other, &mut id, &mut next_id);
                            queue.push_back(other);
                        }
                        code.push(id[other] as i64);
                    }
                }
                cur = self.rot_next[cur];
                if cur == seed {
                    break;
                }
            }
            code.push(-2); // orbit separator
        }
        code.push(self.n_vertices as i64 - visited_vertex.iter().filter(|&&b| b).count() as i64);
        code
    }
}

impl RibbonMap {
    /// Plain-text rotation-system format: one `vertex:` line per vertex with
    /// its half-edge ids in cyclic order, one `edges:` line of pairings and a
    /// `cilia:` line of unpaired half-edge ids.
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let mut per_vertex: Vec<Vec<usize>> = vec![Vec::new(); self.n_vertices];
        let mut seen = vec![false; self.h()];
        for he in 0..self.h() {
            if seen[he] {
                continue;
            }
            let v = self.vertex_of[he];
            let mut cur = he;
            loop {
                seen[cur] = true;
                per_vertex[v].push(cur);
                cur = self.rot_next[cur];
                if cur == he {
                    break;
                }
            }
        }
        for (v, cycle) in per_vertex.iter().enumerate() {
            let ids: Vec<String> = cycle.iter().map(|h| h.to_string()).collect();
            let _ = writeln!(out, "vertex {v}: {}", ids.join(" "));
        }
        let pairs: Vec<String> = self
            .edge_pairs()
            .iter()
            .map(|&(a, b)| format!("{a}-{b}"))
            .collect();
        let _ = writeln!(out, "edges: {}", pairs.join(" "));
        let cilia: Vec<String> = (0..self.h())
            .filter(|&h| self.pairing[h].is_none())
            .map(|h| h.to_string())
            .collect();
        let _ = writeln!(out, "cilia: {}", cilia.join(" "));
        out
    }

    fn edge_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for he in 0..self.h() {
            if let Some(other) = self.pairing[he] {
                if he < other {
                    out.push((he, other));
                }
            }
        }
        out
    }

    /// Parses the format produced by [`RibbonMap::to_text`].
    pub fn from_text(text: &str) -> Result<RibbonMap> {
        let mut vertex_cycles: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut cilia: Vec<usize> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("vertex ") {
                let (label, ids) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::MalformedMap("vertex line needs ':'".into()))?;
                let v: usize = label
                    .trim()
                    .parse()
                    .map_err(|_| Error::MalformedMap("bad vertex label".into()))?;
                let cycle: std::result::Result<Vec<usize>, _> =
                    ids.split_whitespace().map(|s| s.parse()).collect();
                vertex_cycles.push((
                    v,
                    cycle.map_err(|_| Error::MalformedMap("bad half-edge id".into()))?,
                ));
            } else if let Some(rest) = line.strip_prefix("edges:") {
                for pair in rest.split_whitespace() {
                    let (a, b) = pair
                        .split_once('-')
                        .ok_or_else(|| Error::MalformedMap("edge needs a-b".into()))?;
                    edges.push((
                        a.parse()
                            .map_err(|_| Error::MalformedMap("bad edge id".into()))?,
                        b.parse()
                            .map_err(|_| Error::MalformedMap("bad edge id".into()))?,
                    ));
                }
            } else if let Some(rest) = line.strip_prefix("cilia:") {
                for id in rest.split_whitespace() {
                    cilia.push(
                        id.parse()
                            .map_err(|_| Error::MalformedMap("bad cilium id".into()))?,
                    );
                }
            } else {
                return Err(Error::MalformedMap(format!("unrecognized line: {line}")));
            }
        }
        let h = vertex_cycles.iter().map(|(_, c)| c.len()).sum();
        let n_vertices = vertex_cycles.len();
        let mut vertex_of = vec![usize::MAX; h];
        let mut rot_next = vec![usize::MAX; h];
        for (v, cycle) in &vertex_cycles {
            for (i, &he) in cycle.iter().enumerate() {
                if he >= h {
                    return Err(Error::MalformedMap(format!("half-edge {he} out of range")));
                }
                vertex_of[he] = *v;
                rot_next[he] = cycle[(i + 1) % cycle.len()];
            }
        }
        let mut pairing: Vec<Option<usize>> = vec![None; h];
        for (a, b) in edges {
            if a >= h || b >= h {
                return Err(Error::MalformedMap("edge id out of range".into()));
            }
            pairing[a] = Some(b);
            pairing[b] = Some(a);
        }
        let cilia_set: std::collections::HashSet<usize> = cilia.iter().copied().collect();
        for &c in &cilia {
            if c >= h || pairing[c].is_some() {
                return Err(Error::MalformedMap(format!("bad cilium id {c}")));
            }
        }
        // every half-edge is either paired or a declared cilium
        for (he, p) in pairing.iter().enumerate() {
            if p.is_none() && !cilia_set.contains(&he) {
                return Err(Error::MalformedMap(format!(
                    "half-edge {he} neither paired nor a cilium"
                )));
            }
        }
        RibbonMap::new(n_vertices, vertex_of, rot_next, pairing)
    }
}

pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when x and y were already in the same component.
    pub(crate) fn union(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            false
        } else {
            self.parent[rx] = ry;
            true
        }
    }
}

// ---------------------------------------------------------------------------
// Ciliated Wick diagrams of the model
// ---------------------------------------------------------------------------

/// Enumeration ceilings; `pattern_ceiling` bounds (pv + k)! per order.
#[derive(Debug, Clone, Copy)]
pub struct EnumLimits {
    pub pattern_ceiling: u128,
}

impl Default for EnumLimits {
    fn default() -> Self {
        EnumLimits {
            pattern_ceiling: 50_000_000,
        }
    }
}

/// One connected Wick diagram of the interaction Tr (MM†)^p with k labelled
/// source pairs (cilia).
///
/// `pairing[s]` is the M̄-slot matched with M-slot s. M-slots 0..pv live on
/// the interaction vertices (p per vertex, slot j of vertex i at cyclic
/// position 2j), slots pv..pv+k are the cilium legs; likewise for M̄-slots.
#[derive(Debug, Clone)]
pub struct CiliatedDiagram {
    pub p: usize,
    pub k: usize,
    pub order: usize,
    pub pairing: Vec<usize>,
    /// Closed index loops (each contributes one factor of N).
    pub closed_loops: usize,
    /// Row delta pattern: cilium l's M-row ties to cilium `row_perm[l]`'s M̄-row.
    pub row_perm: Permutation,
    /// Column delta pattern.
    pub col_perm: Permutation,
    /// N-exponent of the diagram weight: χ = v(1-p) + closed_loops.
    pub chi: i64,
    /// Broken-face partition π = cycle type of row ∘ col^{-1} (empty for k=0).
    pub pi: IntegerPartition,
    /// Number of Wick patterns represented by this labelled diagram (orbit of
    /// the per-vertex cyclic rotations).
    pub multiplicity: u64,
}

impl CiliatedDiagram {
    /// Genus from χ = 2 - 2g - b with b = row + col broken faces.
    pub fn genus(&self) -> Result<i64> {
        let b = if self.k == 0 {
            0
        } else {
            self.row_perm.cycle_count() + self.col_perm.cycle_count()
        };
        let two_g = 2 - b as i64 - self.chi;
        if two_g < 0 || two_g % 2 != 0 {
            return Err(Error::MalformedMap(format!(
                "no integer genus: chi = {}, b = {b}",
                self.chi
            )));
        }
        Ok(two_g / 2)
    }

    /// Spec-flavoured ribbon map: interaction vertices with 2p half-edges,
    /// each cilium a vertex with (M-leg, cilium half-edge, M̄-leg). A cilium
    /// whose own legs are mutually paired exports as a bare one-half-edge
    /// ciliated vertex (zero edges).
    pub fn to_ribbon_map(&self) -> RibbonMap {
        let (p, k, v) = (self.p, self.k, self.order);
        let mslots = p * v + k;
        // half-edge ids: M-slot s -> 2s, M̄-slot s -> 2s+1, cilium marks after.
        let mut vertex_of = vec![0usize; 2 * mslots];
        let mut rot_next = vec![0usize; 2 * mslots];
        let mut pairing: Vec<Option<usize>> = vec![None; 2 * mslots];
        for s in 0..mslots {
            pairing[2 * s] = Some(2 * self.pairing[s] + 1);
            pairing[2 * self.pairing[s] + 1] = Some(2 * s);
        }
        for i in 0..v {
            // cyclic order: M_0, M̄_0, M_1, M̄_1, ...
            for j in 0..p {
                let m = 2 * (i * p + j);
                let mbar = m + 1;
                vertex_of[m] = i;
                vertex_of[mbar] = i;
                rot_next[m] = mbar;
                rot_next[mbar] = 2 * (i * p + (j + 1) % p);
            }
        }
        let mut cilium_marks = Vec::new();
        for c in 0..k {
            let m = 2 * (p * v + c);
            let mbar = m + 1;
            let vertex = v + c;
            if self.pairing[p * v + c] == p * v + c {
                // bare cilium: single unpaired half-edge
                vertex_of[m] = vertex;
                vertex_of[mbar] = vertex;
                // collapse both legs onto a loop of length 1 carrying the mark
                rot_next[m] = m;
                rot_next[mbar] = mbar;
                pairing[m] = None;
                pairing[mbar] = Some(mbar); // placeholder, fixed below
            } else {
                vertex_of[m] = vertex;
                vertex_of[mbar] = vertex;
                let mark = 2 * mslots + cilium_marks.len();
                cilium_marks.push((m, mbar, mark));
                rot_next[m] = mark;
            }
        }
        // Build final arrays including cilium-mark half-edges.
        let mut vo = vertex_of;
        let mut rn = rot_next;
        let mut pr = pairing;
        for &(m, mbar, mark) in &cilium_marks {
            vo.push(vo[m]);
            rn.push(mbar);
            pr.push(None);
            rn[mbar] = m;
            let _ = mark;
        }
        // Drop placeholder legs of bare cilia: rebuild keeping only used ids.
        let mut keep: Vec<bool> = vec![true; vo.len()];
        for c in 0..k {
            if self.pairing[p * v + c] == p * v + c {
                let m = 2 * (p * v + c);
                keep[m + 1] = false; // drop the M̄ leg; M leg becomes the cilium
                pr[m] = None;
                rn[m] = m;
            }
        }
        let mut remap = vec![usize::MAX; vo.len()];
        let mut nv = Vec::new();
        let mut nr = Vec::new();
        let mut np = Vec::new();
        for (he, &k_) in keep.iter().enumerate() {
            if k_ {
                remap[he] = nv.len();
                nv.push(vo[he]);
                nr.push(rn[he]);
                np.push(pr[he]);
            }
        }
        let nr: Vec<usize> = nr.into_iter().map(|t| remap[t]).collect();
        let np: Vec<Option<usize>> = np.into_iter().map(|t| t.map(|u| remap[u])).collect();
        RibbonMap::new(v + k, nv, nr, np).expect("exported map is well-formed")
    }
}

fn factorial_u128(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Streams every connected Wick pattern with exactly `order` interaction
/// vertices and k cilia, in lexicographic pairing order.
pub fn diagram_stream(p: usize, k: usize, order: usize) -> impl Iterator<Item = CiliatedDiagram> {
    let mslots = p * order + k;
    PairingIter::new(mslots).filter_map(move |pairing| analyze_diagram(p, k, order, pairing))
}

struct PairingIter {
    current: Option<Vec<usize>>,
}

impl PairingIter {
    fn new(n: usize) -> Self {
        PairingIter {
            current: Some((0..n).collect()),
        }
    }
}

impl Iterator for PairingIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let mut nxt = out.clone();
        if nxt.is_empty() {
            self.current = None;
            return Some(out);
        }
        // lexicographic next permutation
        let mut i = nxt.len() - 1;
        while i > 0 && nxt[i - 1] >= nxt[i] {
            i -= 1;
        }
        if i == 0 {
            self.current = None;
        } else {
            let mut j = nxt.len() - 1;
            while nxt[j] <= nxt[i - 1] {
                j -= 1;
            }
            nxt.swap(i - 1, j);
            nxt[i..].reverse();
            self.current = Some(nxt);
        }
        Some(out)
    }
}

/// Index-line analysis: connectivity, closed loops, delta patterns.
fn analyze_diagram(
    p: usize,
    k: usize,
    order: usize,
    pairing: Vec<usize>,
) -> Option<CiliatedDiagram> {
    let v = order;
    let mslots = p * v + k;
    // Connectivity over nodes = interaction vertices + 2k separate legs.
    // (Each source leg is its own node: a cumulant is the joint cumulant of
    // the 2k entries, so diagrams splitting the legs are excluded.)
    let n_nodes = v + 2 * k;
    let node_of_m = |s: usize| {
        if s < p * v {
            s / p
        } else {
            v + 2 * (s - p * v)
        }
    };
    let node_of_mbar = |s: usize| {
        if s < p * v {
            s / p
        } else {
            v + 2 * (s - p * v) + 1
        }
    };
    let mut dsu = Dsu::new(n_nodes.max(1));
    for (s, &t) in pairing.iter().enumerate() {
        dsu.union(node_of_m(s), node_of_mbar(t));
    }
    if n_nodes > 0 {
        let root = dsu.find(0);
        if (1..n_nodes).any(|x| dsu.find(x) != root) {
            return None;
        }
    }
    // Index lines decompose into a row system and a column system on the
    // M-slots. From M-slot s the line runs through the propagator to M̄-slot
    // t = pairing[s]; inside a vertex the row line continues to the next M
    // slot of the cyclic word (shared a-index), the column line to the same
    // slot (shared b-index). Lines entering a cilium M̄-slot terminate there.
    // successor(s) = Some(next M-slot) or Err(cilium index) at termination.
    let row_step = |s: usize| -> std::result::Result<usize, usize> {
        let t = pairing[s];
        if t >= p * v {
            Err(t - p * v)
        } else {
            let (i, j) = (t / p, t % p);
            Ok(i * p + (j + 1) % p)
        }
    };
    let col_step = |s: usize| -> std::result::Result<usize, usize> {
        let t = pairing[s];
        if t >= p * v {
            Err(t - p * v)
        } else {
            Ok(t)
        }
    };
    let mut closed_loops = 0usize;
    let mut row_perm = vec![usize::MAX; k];
    let mut col_perm = vec![usize::MAX; k];
    for (step, perm) in [
        (
            &row_step as &dyn Fn(usize) -> std::result::Result<usize, usize>,
            &mut row_perm,
        ),
        (&col_step, &mut col_perm),
    ] {
        let mut seen = vec![false; mslots];
        // chains from each cilium M-slot
        for c in 0..k {
            let mut s = p * v + c;
            loop {
                seen[s] = true;
                match step(s) {
                    Err(cb) => {
                        perm[c] = cb;
                        break;
                    }
                    Ok(next) => s = next,
                }
            }
        }
        // remaining orbits are closed index loops
        for start in 0..p * v {
            if seen[start] {
                continue;
            }
            closed_loops += 1;
            let mut s = start;
            while !seen[s] {
                seen[s] = true;
                s = step(s).expect("closed loops avoid cilia");
            }
        }
    }
    let row = Permutation::new(row_perm).expect("row chains form a bijection");
    let col = Permutation::new(col_perm).expect("col chains form a bijection");
    let pi = if k == 0 {
        IntegerPartition::new(vec![]).unwrap_or_else(|_| empty_partition())
    } else {
        row.compose(&col.inverse()).cycle_type()
    };
    let chi = v as i64 * (1 - p as i64) + closed_loops as i64;
    Some(CiliatedDiagram {
        p,
        k,
        order: v,
        pairing,
        closed_loops,
        row_perm: row,
        col_perm: col,
        chi,
        pi,
        multiplicity: 1,
    })
}

fn empty_partition() -> IntegerPartition {
    IntegerPartition::new(vec![]).expect("empty partition is valid")
}

/// Every labelled ciliated diagram of the model's Feynman class with
/// expansion order ≤ `max_edges` (one power of λ per interaction vertex) and
/// exactly k cilia, each exactly once, with pattern multiplicities attached.
///
/// Labelled diagrams are Wick patterns modulo the per-vertex cyclic rotation
/// of the p (M, M†) slot pairs; `multiplicity` counts the patterns in the
/// rotation orbit, so that weighted sums over patterns can be taken over this
/// stream.
pub fn enumerate_ciliated_maps(
    p: usize,
    k: usize,
    max_edges: usize,
    limits: &EnumLimits,
) -> Result<Vec<CiliatedDiagram>> {
    if p < 2 {
        return Err(Error::InvalidParameter("p must be >= 2".into()));
    }
    let mut out = Vec::new();
    for order in 0..=max_edges {
        out.extend(enumerate_at_order(p, k, order, limits)?);
    }
    Ok(out)
}

/// Labelled diagrams at a single expansion order.
pub fn enumerate_at_order(
    p: usize,
    k: usize,
    order: usize,
    limits: &EnumLimits,
) -> Result<Vec<CiliatedDiagram>> {
    let patterns = factorial_u128(p * order + k);
    if patterns > limits.pattern_ceiling {
        return Err(Error::ResourceCeiling {
            needed: patterns,
            ceiling: limits.pattern_ceiling,
        });
    }
    if order == 0 && k == 0 {
        return Ok(Vec::new());
    }
    let mut classes: HashMap<Vec<usize>, CiliatedDiagram> = HashMap::new();
    let mut order_key: Vec<Vec<usize>> = Vec::new();
    for diagram in diagram_stream(p, k, order) {
        let key = rotation_canonical(p, k, order, &diagram.pairing);
        match classes.get_mut(&key) {
            Some(existing) => existing.multiplicity += 1,
            None => {
                order_key.push(key.clone());
                classes.insert(key, diagram);
            }
        }
    }
    Ok(order_key
        .into_iter()
        .map(|k_| classes.remove(&k_).expect("key inserted above"))
        .collect())
}

/// Minimal pairing encoding over the per-vertex cyclic rotations of the
/// (M, M†) slot pairs; vertex labels stay fixed.
fn rotation_canonical(p: usize, k: usize, v: usize, pairing: &[usize]) -> Vec<usize> {
    let mslots = p * v + k;
    let mut best: Option<Vec<usize>> = None;
    let mut shifts = vec![0usize; v.max(1)];
    loop {
        // apply the shift: M-slot (i, j) -> (i, j + s_i), same for M̄.
        let slot_map = |s: usize, shifts: &[usize]| -> usize {
            if s < p * v {
                let i = s / p;
                let j = s % p;
                i * p + (j + shifts[i]) % p
            } else {
                s
            }
        };
        let mut mapped = vec![0usize; mslots];
        for (s, &t) in pairing.iter().enumerate() {
            mapped[slot_map(s, &shifts)] = slot_map(t, &shifts);
        }
        if best.as_ref().map_or(true, |b| mapped < *b) {
            best = Some(mapped);
        }
        // next shift vector
        let mut i = 0;
        loop {
            if i >= v {
                return best.unwrap();
            }
            shifts[i] += 1;
            if shifts[i] < p {
                break;
            }
            shifts[i] = 0;
            i += 1;
        }
        if v == 0 {
            return best.unwrap();
        }
    }
}

// ---------------------------------------------------------------------------
// LVR graphs
// ---------------------------------------------------------------------------

/// A connected ribbon map with a distinguished spanning tree and a labelling
/// of the loop (non-tree) edges.
#[derive(Debug, Clone)]
pub struct LvrGraph {
    pub map: RibbonMap,
    /// Edge indices (into `map.edge_list()`) of the spanning tree.
    pub tree: Vec<usize>,
    /// Loop edge indices in label order (label j = `loop_edge_labels[j]`).
    pub loop_edge_labels: Vec<usize>,
}

impl LvrGraph {
    pub fn is_tree(&self) -> bool {
        self.loop_edge_labels.is_empty()
    }
}

/// Every LVR graph (connected ciliated map + spanning tree + loop-edge
/// labelling) with `n_edges` edges and k cilia, exactly once.
pub fn enumerate_lvr_graphs(
    k: usize,
    n_edges: usize,
    limits: &EnumLimits,
) -> Result<Vec<LvrGraph>> {
    if n_edges > 3 {
        return Err(Error::ResourceCeiling {
            needed: n_edges as u128,
            ceiling: 3,
        });
    }
    let mut out = Vec::new();
    for map in enumerate_generic_ciliated_maps(k, n_edges, limits)? {
        let trees = map.spanning_trees()?;
        let all_edges: Vec<usize> = (0..map.edge_list().len()).collect();
        for tree in trees {
            let loops: Vec<usize> = all_edges
                .iter()
                .copied()
                .filter(|e| !tree.contains(e))
                .collect();
            for labelling in permutations_of(&loops) {
                out.push(LvrGraph {
                    map: map.clone(),
                    tree: tree.clone(),
                    loop_edge_labels: labelling,
                });
            }
        }
    }
    Ok(out)
}

fn permutations_of(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut scratch: Vec<usize> = (0..items.len()).collect();
    loop {
        out.push(scratch.iter().map(|&i| items[i]).collect());
        // reuse lexicographic successor
        let mut i = scratch.len() - 1;
        while i > 0 && scratch[i - 1] >= scratch[i] {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        let mut j = scratch.len() - 1;
        while scratch[j] <= scratch[i - 1] {
            j -= 1;
        }
        scratch.swap(i - 1, j);
        scratch[i..].reverse();
    }
}

/// Connected ciliated maps with arbitrary vertex valences, `n_edges` edges
/// and k cilia, vertices labelled, exactly once each.
pub fn enumerate_generic_ciliated_maps(
    k: usize,
    n_edges: usize,
    limits: &EnumLimits,
) -> Result<Vec<RibbonMap>> {
    let stubs = 2 * n_edges + k;
    let max_v = if stubs == 0 { 1 } else { stubs };
    let mut seen: std::collections::HashSet<Vec<i64>> = std::collections::HashSet::new();
    let mut out = Vec::new();
    for v in 1..=max_v {
        let assignments = (v as u128).checked_pow(stubs as u32).unwrap_or(u128::MAX);
        if assignments > limits.pattern_ceiling {
            return Err(Error::ResourceCeiling {
                needed: assignments,
                ceiling: limits.pattern_ceiling,
            });
        }
        // stub ids: 2j, 2j+1 belong to edge j; cilium ids after.
        let mut assign = vec![0usize; stubs];
        loop {
            if let Some(map) = build_generic_map(v, n_edges, k, &assign) {
                if map.is_connected() {
                    for m in all_rotations(&map) {
                        if seen.insert(m.labelled_code()) {
                            out.push(m);
                        }
                    }
                }
            }
            // next assignment in base v; a full wrap-around ends the scan
            if stubs == 0 {
                break;
            }
            let mut i = 0;
            while i < stubs {
                assign[i] += 1;
                if assign[i] < v {
                    break;
                }
                assign[i] = 0;
                i += 1;
            }
            if i == stubs {
                break;
            }
        }
    }
    Ok(out)
}

/// All cyclic-order refinements of a stub-to-vertex assignment.
fn all_rotations(base: &RibbonMap) -> Vec<RibbonMap> {
    // `build_generic_map` fixes one cyclic order per vertex (sorted order);
    // emit every cyclic arrangement of each vertex's stubs.
    let mut per_vertex: Vec<Vec<usize>> = vec![Vec::new(); base.n_vertices];
    for (he, &v) in base.vertex_of.iter().enumerate() {
        per_vertex[v].push(he);
    }
    // enumerate products of cyclic orders: fix first element, permute rest
    let mut variants: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    for stubs in &per_vertex {
        let arrangements: Vec<Vec<usize>> = if stubs.len() <= 1 {
            vec![stubs.clone()]
        } else {
            let rest: Vec<usize> = stubs[1..].to_vec();
            permutations_of(&rest)
                .into_iter()
                .map(|perm| {
                    let mut cyc = vec![stubs[0]];
                    cyc.extend(perm);
                    cyc
                })
                .collect()
        };
        let mut next = Vec::new();
        for partial in &variants {
            for arr in &arrangements {
                let mut p = partial.clone();
                p.push(arr.clone());
                next.push(p);
            }
        }
        variants = next;
    }
    variants
        .into_iter()
        .map(|orders| {
            let mut rot_next = vec![0usize; base.h()];
            for cyc in &orders {
                for (i, &he) in cyc.iter().enumerate() {
                    rot_next[he] = cyc[(i + 1) % cyc.len()];
                }
            }
            RibbonMap::new(
                base.n_vertices,
                base.vertex_of.clone(),
                rot_next,
                base.pairing.clone(),
            )
            .expect("rotation variant is well-formed")
        })
        .collect()
}

fn build_generic_map(v: usize, n_edges: usize, k: usize, assign: &[usize]) -> Option<RibbonMap> {
    // cilium count per vertex must stay <= 1
    let mut cilia = vec![0usize; v];
    for c in 0..k {
        cilia[assign[2 * n_edges + c]] += 1;
        if cilia[assign[2 * n_edges + c]] > 1 {
            return None;
        }
    }
    // every vertex must receive at least one stub (no isolated vertices in
    // this enumeration, except the single-vertex empty map)
    if 2 * n_edges + k > 0 {
        let mut used = vec![false; v];
        for &a in assign {
            used[a] = true;
        }
        if used.iter().any(|&u| !u) {
            return None;
        }
    }
    let h = 2 * n_edges + k;
    let vertex_of = assign.to_vec();
    let mut pairing: Vec<Option<usize>> = vec![None; h];
    for j in 0..n_edges {
        pairing[2 * j] = Some(2 * j + 1);
        pairing[2 * j + 1] = Some(2 * j);
    }
    // default rotation: sorted order per vertex
    let mut per_vertex: Vec<Vec<usize>> = vec![Vec::new(); v];
    for (he, &vv) in vertex_of.iter().enumerate() {
        per_vertex[vv].push(he);
    }
    let mut rot_next = vec![0usize; h];
    for stubs in &per_vertex {
        for (i, &he) in stubs.iter().enumerate() {
            rot_next[he] = stubs[(i + 1) % stubs.len()];
        }
    }
    RibbonMap::new(v, vertex_of, rot_next, pairing).ok()
}
