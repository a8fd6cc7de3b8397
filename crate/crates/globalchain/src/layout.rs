//! Recursive three-species chain geometry.
//!
//! Level-0 computational blocks are `n_comp` A cells, level-0 interconnects are
//! `C B B C`, and a level-k block alternates `n_comp` level-(k-1) blocks with
//! level-(k-1) interconnects `C · B̃_{k-2} · C`. Inside B̃ blocks the roles of A
//! and B are swapped.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::LayoutError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Species {
    A,
    B,
    C,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::A, Species::B, Species::C];

    /// The other computational species (A <-> B); C maps to itself.
    pub fn swapped(self) -> Species {
        match self {
            Species::A => Species::B,
            Species::B => Species::A,
            Species::C => Species::C,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Species::A => 0,
            Species::B => 1,
            Species::C => 2,
        }
    }

    pub fn from_char(c: char) -> Option<Species> {
        match c {
            'A' => Some(Species::A),
            'B' => Some(Species::B),
            'C' => Some(Species::C),
            _ => None,
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Species::A => "A",
            Species::B => "B",
            Species::C => "C",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellRole {
    Data,
    Syndrome,
    Ancilla,
    Wire,
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub species: Species,
    pub role: CellRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutConfig {
    pub n_comp: usize,
    pub level: u32,
    pub blocks: usize,
    pub code_id: String,
    /// Place a C cell at both chain ends so every block edge has a C neighbour.
    #[serde(default)]
    pub capped: bool,
}

impl LayoutConfig {
    pub fn new(n_comp: usize, level: u32, blocks: usize, code_id: &str) -> Self {
        LayoutConfig { n_comp, level, blocks, code_id: code_id.to_string(), capped: false }
    }

    pub fn capped(mut self) -> Self {
        self.capped = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind {
    Chain,
    ABlock { level: i32 },
    BBlock { level: i32 },
    Interconnect { level: i32 },
    CCell,
    Leaf { species: Species },
}

impl NodeKind {
    fn block(species: Species, level: i32) -> NodeKind {
        match species {
            Species::A => NodeKind::ABlock { level },
            _ => NodeKind::BBlock { level },
        }
    }

    fn block_level(&self) -> Option<(Species, i32)> {
        match *self {
            NodeKind::ABlock { level } => Some((Species::A, level)),
            NodeKind::BBlock { level } => Some((Species::B, level)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutNode {
    #[serde(flatten)]
    pub kind: NodeKind,
    pub span: [usize; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<LayoutNode>,
}

impl LayoutNode {
    pub fn range(&self) -> Range<usize> {
        self.span[0]..self.span[1]
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a LayoutNode)) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLayout {
    pub config: LayoutConfig,
    pub cells: Vec<Cell>,
    pub tree: LayoutNode,
}

/// Smallest block length that holds two mirror-symmetric logical qubits.
pub fn min_block_len(code_id: &str) -> Result<usize, LayoutError> {
    match code_id {
        "bare" => Ok(2),
        "steane" => Ok(26),
        other => Err(LayoutError::UnknownCode(other.to_string())),
    }
}

/// Role map of one level-0 block, mirror-symmetric about its midpoint.
pub fn block_roles(code_id: &str, n: usize) -> Result<Vec<CellRole>, LayoutError> {
    let min = min_block_len(code_id)?;
    if n < min {
        return Err(LayoutError::BlockTooSmall { code: code_id.to_string(), n_comp: n, min });
    }
    let mut roles = vec![CellRole::Ancilla; n];
    match code_id {
        "bare" => roles.iter_mut().for_each(|r| *r = CellRole::Data),
        "steane" => {
            for i in 0..n / 2 {
                let r = match i {
                    0..=5 => CellRole::Syndrome,
                    6..=12 => CellRole::Data,
                    _ => CellRole::Ancilla,
                };
                roles[i] = r;
                roles[n - 1 - i] = r;
            }
        }
        _ => unreachable!(),
    }
    Ok(roles)
}

/// Closed-form lengths: (len Ã_k = len B̃_k, len D̃_k).
pub fn block_len(n_comp: usize, k: i32) -> usize {
    match k {
        k if k < 0 => 2,
        0 => n_comp,
        k => n_comp * block_len(n_comp, k - 1) + (n_comp - 1) * interconnect_len(n_comp, k - 1),
    }
}

pub fn interconnect_len(n_comp: usize, k: i32) -> usize {
    2 + block_len(n_comp, k - 1)
}

struct Builder<'a> {
    n_comp: usize,
    roles: &'a [CellRole],
    cells: Vec<Cell>,
}

impl Builder<'_> {
    fn leaf(&mut self, species: Species, role: CellRole) -> LayoutNode {
        let i = self.cells.len();
        self.cells.push(Cell { species, role });
        let kind = if species == Species::C { NodeKind::CCell } else { NodeKind::Leaf { species } };
        LayoutNode { kind, span: [i, i + 1], children: Vec::new() }
    }

    fn block(&mut self, species: Species, k: i32) -> LayoutNode {
        let lo = self.cells.len();
        let mut children = Vec::new();
        match k {
            k if k < 0 => {
                for _ in 0..2 {
                    children.push(self.leaf(species, CellRole::Wire));
                }
            }
            0 => {
                for i in 0..self.n_comp {
                    let role = self.roles[i];
                    children.push(self.leaf(species, role));
                }
            }
            _ => {
                for i in 0..self.n_comp {
                    children.push(self.block(species, k - 1));
                    if i + 1 < self.n_comp {
                        children.push(self.interconnect(species, k - 1));
                    }
                }
            }
        }
        LayoutNode { kind: NodeKind::block(species, k), span: [lo, self.cells.len()], children }
    }

    fn interconnect(&mut self, outer: Species, k: i32) -> LayoutNode {
        let lo = self.cells.len();
        let children = vec![
            self.leaf(Species::C, CellRole::Reset),
            self.block(outer.swapped(), k - 1),
            self.leaf(Species::C, CellRole::Reset),
        ];
        LayoutNode { kind: NodeKind::Interconnect { level: k }, span: [lo, self.cells.len()], children }
    }
}

pub fn build_layout(config: &LayoutConfig) -> Result<ChainLayout, LayoutError> {
    if config.blocks == 0 {
        return Err(LayoutError::InvalidConfig("blocks must be positive".into()));
    }
    if config.n_comp == 0 {
        return Err(LayoutError::InvalidConfig("n_comp must be positive".into()));
    }
    let roles = block_roles(&config.code_id, config.n_comp)?;
    let level = config.level as i32;
    let mut b = Builder { n_comp: config.n_comp, roles: &roles, cells: Vec::new() };
    let mut children = Vec::new();
    if config.capped {
        children.push(b.leaf(Species::C, CellRole::Reset));
    }
    for i in 0..config.blocks {
        children.push(b.block(Species::A, level));
        if i + 1 < config.blocks {
            children.push(b.interconnect(Species::A, level));
        }
    }
    if config.capped {
        children.push(b.leaf(Species::C, CellRole::Reset));
    }
    let tree = LayoutNode { kind: NodeKind::Chain, span: [0, b.cells.len()], children };
    Ok(ChainLayout { config: config.clone(), cells: b.cells, tree })
}

/// Report of [`verify_layout_invariants`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayoutReport {
    pub pass: bool,
    pub violation: Option<String>,
}

impl ChainLayout {
    /// Assemble a layout without checking it (see [`verify_layout_invariants`]).
    pub fn from_parts(config: LayoutConfig, cells: Vec<Cell>, tree: LayoutNode) -> Self {
        ChainLayout { config, cells, tree }
    }

    /// Small verification instance from a species string such as `"ACBBCA"`.
    ///
    /// Maximal A or B runs become level-0 blocks (length-2 runs flanked by C on
    /// both sides become wires); A cells next to a C are syndrome cells, other
    /// A cells are data.
    pub fn from_pattern(pattern: &str) -> Result<Self, LayoutError> {
        let species: Vec<Species> = pattern
            .chars()
            .map(|c| Species::from_char(c).ok_or_else(|| LayoutError::BadPattern(pattern.to_string())))
            .collect::<Result<_, _>>()?;
        if species.is_empty() {
            return Err(LayoutError::BadPattern(pattern.to_string()));
        }
        let n = species.len();
        let is_c = |i: isize| i >= 0 && (i as usize) < n && species[i as usize] == Species::C;
        let mut cells = Vec::with_capacity(n);
        let mut children = Vec::new();
        let mut i = 0;
        let mut longest_a = 0;
        let mut a_runs = 0;
        while i < n {
            let s = species[i];
            if s == Species::C {
                cells.push(Cell { species: s, role: CellRole::Reset });
                children.push(LayoutNode { kind: NodeKind::CCell, span: [i, i + 1], children: Vec::new() });
                i += 1;
                continue;
            }
            let lo = i;
            while i < n && species[i] == s {
                i += 1;
            }
            let len = i - lo;
            let wire = s == Species::B && len == 2 && is_c(lo as isize - 1) && is_c(i as isize);
            let mut leaves = Vec::new();
            for j in lo..i {
                let role = if s == Species::B {
                    CellRole::Wire
                } else if is_c(j as isize - 1) || is_c(j as isize + 1) {
                    CellRole::Syndrome
                } else {
                    CellRole::Data
                };
                cells.push(Cell { species: s, role });
                leaves.push(LayoutNode { kind: NodeKind::Leaf { species: s }, span: [j, j + 1], children: Vec::new() });
            }
            if s == Species::A {
                longest_a = longest_a.max(len);
                a_runs += 1;
            }
            let level = if wire { -1 } else { 0 };
            children.push(LayoutNode { kind: NodeKind::block(s, level), span: [lo, i], children: leaves });
        }
        let config = LayoutConfig {
            n_comp: longest_a.max(1),
            level: 0,
            blocks: a_runs.max(1),
            code_id: "pattern".to_string(),
            capped: species[0] == Species::C && species[n - 1] == Species::C,
        };
        let tree = LayoutNode { kind: NodeKind::Chain, span: [0, n], children };
        Ok(ChainLayout { config, cells, tree })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn species(&self, i: usize) -> Species {
        self.cells[i].species
    }

    pub fn species_string(&self) -> String {
        self.cells.iter().map(|c| c.species.to_string()).collect()
    }

    pub fn cell_at(&self, index: usize) -> Result<Cell, LayoutError> {
        self.cells
            .get(index)
            .copied()
            .ok_or(LayoutError::OutOfRange { index, len: self.cells.len() })
    }

    /// Ordered spans of every node of the given kind.
    pub fn spans_of(&self, kind: NodeKind) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        self.tree.visit(&mut |n| {
            if n.kind == kind {
                out.push(n.range());
            }
        });
        out.sort_by_key(|r| r.start);
        out
    }

    /// Cell indices of one species.
    pub fn cells_of(&self, species: Species) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.species(i) == species).collect()
    }

    /// Maximal contiguous runs of one species.
    pub fn runs(&self, species: Species) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.len() {
            if self.species(i) == species {
                let lo = i;
                while i < self.len() && self.species(i) == species {
                    i += 1;
                }
                out.push(lo..i);
            } else {
                i += 1;
            }
        }
        out
    }

    /// True if every run of `species` has a C cell on both sides.
    pub fn runs_bounded_by_c(&self, species: Species) -> bool {
        self.runs(species).iter().all(|r| {
            r.start > 0
                && r.end < self.len()
                && self.species(r.start - 1) == Species::C
                && self.species(r.end) == Species::C
        })
    }

    /// Cells of `species` with at least one C neighbour.
    pub fn c_adjacent(&self, species: Species) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| {
                self.species(i) == species
                    && ((i > 0 && self.species(i - 1) == Species::C)
                        || (i + 1 < self.len() && self.species(i + 1) == Species::C))
            })
            .collect()
    }

    /// Spans of the level-0 blocks holding encoded data (A-block(0) nodes).
    pub fn computational_blocks(&self) -> Vec<Range<usize>> {
        self.spans_of(NodeKind::ABlock { level: 0 })
    }

    pub fn cells_with_role(&self, role: CellRole) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.cells[i].role == role).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }
}

fn check_node(node: &LayoutNode, cfg: &LayoutConfig, layout: &ChainLayout) -> Result<(), String> {
    let r = node.range();
    if r.end > layout.len() || r.start > r.end {
        return Err(format!("span {:?} outside chain", r));
    }
    if !node.children.is_empty() {
        let mut at = r.start;
        for c in &node.children {
            if c.span[0] != at {
                return Err(format!("tiling: child span {:?} does not start at {}", c.range(), at));
            }
            at = c.span[1];
        }
        if at != r.end {
            return Err(format!("tiling: children end at {} inside {:?}", at, r));
        }
    }
    match node.kind {
        NodeKind::Leaf { .. } | NodeKind::CCell => {
            if r.len() != 1 || !node.children.is_empty() {
                return Err(format!("leaf span {:?} must be a single cell", r));
            }
        }
        NodeKind::Interconnect { level } => {
            let ok = node.children.len() == 3
                && node.children[0].kind == NodeKind::CCell
                && node.children[2].kind == NodeKind::CCell
                && node.children[1].kind.block_level().map(|(_, k)| k) == Some(level - 1)
                && (level > 0 || node.children[1].range().len() == 2);
            if !ok {
                return Err(format!("interconnect pattern at {:?}", r));
            }
        }
        NodeKind::ABlock { level } | NodeKind::BBlock { level } => {
            let (species, _) = node.kind.block_level().unwrap();
            if level <= 0 {
                let want = if level < 0 { 2 } else if cfg.code_id == "pattern" { r.len() } else { cfg.n_comp };
                if r.len() != want || node.children.iter().any(|c| c.kind != NodeKind::Leaf { species }) {
                    return Err(format!("recursion shape: level-{} block at {:?}", level, r));
                }
            } else {
                let n = node.children.len();
                let ok = n == 2 * cfg.n_comp - 1
                    && node.children.iter().enumerate().all(|(i, c)| {
                        if i % 2 == 0 {
                            c.kind == NodeKind::block(species, level - 1)
                        } else {
                            c.kind == NodeKind::Interconnect { level: level - 1 }
                        }
                    });
                if !ok {
                    return Err(format!("recursion shape: level-{} block at {:?}", level, r));
                }
            }
        }
        NodeKind::Chain => {}
    }
    for c in &node.children {
        check_node(c, cfg, layout)?;
    }
    Ok(())
}

/// Checks tiling, recursion shape, interconnect pattern, roles and mirror symmetry.
pub fn verify_layout_invariants(layout: &ChainLayout) -> LayoutReport {
    let fail = |v: String| LayoutReport { pass: false, violation: Some(v) };
    if layout.tree.span != [0, layout.len()] {
        return fail(format!("root span {:?} does not cover {} cells", layout.tree.span, layout.len()));
    }
    let mut flat = Vec::new();
    layout.tree.visit(&mut |n| match n.kind {
        NodeKind::Leaf { species } => flat.push(species),
        NodeKind::CCell => flat.push(Species::C),
        _ => {}
    });
    let species: Vec<Species> = layout.cells.iter().map(|c| c.species).collect();
    if flat != species {
        return fail("flattening mismatch".to_string());
    }
    if let Err(v) = check_node(&layout.tree, &layout.config, layout) {
        return fail(v);
    }
    for (i, c) in layout.cells.iter().enumerate() {
        if (c.species == Species::C) != (c.role == CellRole::Reset) {
            return fail(format!("role/species mismatch at cell {}", i));
        }
    }
    let kinds: &[NodeKind] = if layout.config.code_id == "pattern" { &[] } else { &[NodeKind::ABlock { level: 0 }, NodeKind::BBlock { level: 0 }] };
    for &kind in kinds {
        for r in layout.spans_of(kind) {
            let roles: Vec<CellRole> = layout.cells[r.clone()].iter().map(|c| c.role).collect();
            if roles.iter().ne(roles.iter().rev()) {
                return fail(format!("mirror symmetry of block {:?}", r));
            }
        }
    }
    if layout.config.code_id != "pattern" && species.iter().ne(species.iter().rev()) {
        return fail("chain mirror symmetry".to_string());
    }
    LayoutReport { pass: true, violation: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(cfg: LayoutConfig) -> String {
        build_layout(&cfg).unwrap().species_string()
    }

    #[test]
    fn base_level_examples() {
        assert_eq!(seq(LayoutConfig::new(4, 0, 2, "bare")), "AAAACBBCAAAA");
        assert_eq!(seq(LayoutConfig::new(4, 0, 1, "bare")), "AAAA");
        assert_eq!(seq(LayoutConfig::new(4, 0, 1, "bare").capped()), "CAAAAC");
    }

    #[test]
    fn level_one_length_matches_hand_unrolling() {
        // Ã_1 = (A^4 · CBBC)^3 · A^4
        let l = build_layout(&LayoutConfig::new(4, 1, 1, "bare")).unwrap();
        assert_eq!(l.len(), 28);
        assert_eq!(l.species_string(), "AAAACBBCAAAACBBCAAAACBBCAAAA");
        let ic = l.spans_of(NodeKind::Interconnect { level: 0 });
        assert_eq!(ic, vec![4..8, 12..16, 20..24]);
    }

    #[test]
    fn level_two_swaps_species_inside_interconnects() {
        // D̃_1 = C · B̃_0 · C = C BBBB C
        let l = build_layout(&LayoutConfig::new(4, 2, 1, "bare")).unwrap();
        let ic1 = l.spans_of(NodeKind::Interconnect { level: 1 });
        assert_eq!(ic1.len(), 3);
        for r in ic1 {
            let s: String = l.cells[r].iter().map(|c| c.species.to_string()).collect();
            assert_eq!(s, "CBBBBC");
        }
        assert_eq!(l.len(), 4 * 28 + 3 * 6);
        assert!(verify_layout_invariants(&l).pass);
    }

    #[test]
    fn swapped_interconnect_inside_b_block() {
        // B̃_1 sits inside D̃_2 and contains C A A C wires.
        let l = build_layout(&LayoutConfig::new(4, 3, 1, "bare")).unwrap();
        let b1 = l.spans_of(NodeKind::BBlock { level: 1 });
        assert!(!b1.is_empty());
        let s: String = l.cells[b1[0].clone()].iter().map(|c| c.species.to_string()).collect();
        assert_eq!(s, "BBBBCAACBBBBCAACBBBBCAACBBBB");
        assert!(verify_layout_invariants(&l).pass);
    }

    #[test]
    fn cell_queries() {
        let l = build_layout(&LayoutConfig::new(4, 0, 2, "bare")).unwrap();
        assert_eq!(l.cell_at(0).unwrap(), Cell { species: Species::A, role: CellRole::Data });
        assert_eq!(l.cell_at(4).unwrap(), Cell { species: Species::C, role: CellRole::Reset });
        assert_eq!(l.cell_at(5).unwrap(), Cell { species: Species::B, role: CellRole::Wire });
        assert!(l.cell_at(12).is_err());
        assert_eq!(l.spans_of(NodeKind::ABlock { level: 0 }), vec![0..4, 8..12]);
        let c: Vec<usize> = l.spans_of(NodeKind::CCell).into_iter().map(|r| r.start).collect();
        assert_eq!(c, vec![4, 7]);
        assert!(l.spans_of(NodeKind::Interconnect { level: 3 }).is_empty());
    }

    #[test]
    fn steane_roles_are_edge_packed_and_mirrored() {
        let roles = block_roles("steane", 26).unwrap();
        assert!(roles[..6].iter().all(|r| *r == CellRole::Syndrome));
        assert!(roles[6..13].iter().all(|r| *r == CellRole::Data));
        assert!(roles.iter().eq(roles.iter().rev()));
        let odd = block_roles("steane", 29).unwrap();
        assert_eq!(odd[14], CellRole::Ancilla);
        assert!(block_roles("steane", 25).is_err());
        assert!(block_roles("toric", 30).is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(build_layout(&LayoutConfig::new(4, 0, 0, "bare")).is_err());
        assert!(build_layout(&LayoutConfig::new(0, 0, 1, "bare")).is_err());
        assert!(build_layout(&LayoutConfig::new(20, 0, 1, "steane")).is_err());
    }

    #[test]
    fn verify_detects_violations() {
        let good = build_layout(&LayoutConfig::new(4, 0, 2, "bare")).unwrap();
        assert!(verify_layout_invariants(&good).pass);

        let mut permuted = good.clone();
        permuted.cells.swap(3, 4);
        let rep = verify_layout_invariants(&permuted);
        assert_eq!(rep.violation.as_deref(), Some("flattening mismatch"));

        // interconnect C,B,C: drop one wire spin and shift the right block.
        let mut cells = good.cells.clone();
        cells.remove(5);
        let mut tree = good.tree.clone();
        let ic = &mut tree.children[1];
        ic.children[1].children.pop();
        ic.children[1].span = [5, 6];
        ic.children[2].span = [6, 7];
        ic.span = [4, 7];
        let right = &mut tree.children[2];
        right.span = [7, 11];
        for (k, leaf) in right.children.iter_mut().enumerate() {
            leaf.span = [7 + k, 8 + k];
        }
        tree.span = [0, 11];
        let bad = ChainLayout::from_parts(good.config.clone(), cells, tree);
        let rep = verify_layout_invariants(&bad);
        assert!(!rep.pass);
        assert!(rep.violation.unwrap().starts_with("interconnect pattern"));
    }

    #[test]
    fn pattern_layouts() {
        let l = ChainLayout::from_pattern("AACBBCAA").unwrap();
        assert_eq!(l.cells[0].role, CellRole::Data);
        assert_eq!(l.cells[1].role, CellRole::Syndrome);
        assert_eq!(l.cells[3].role, CellRole::Wire);
        assert!(verify_layout_invariants(&l).pass);
        assert_eq!(l.spans_of(NodeKind::BBlock { level: -1 }), vec![3..5]);
        assert!(ChainLayout::from_pattern("AXC").is_err());
        assert!(ChainLayout::from_pattern("CAAC").unwrap().config.capped);
    }

    #[test]
    fn json_round_trip() {
        let l = build_layout(&LayoutConfig::new(4, 1, 2, "bare")).unwrap();
        let back: ChainLayout = serde_json::from_str(&l.to_json()).unwrap();
        assert_eq!(back, l);
        let v: serde_json::Value = serde_json::from_str(&l.to_json()).unwrap();
        assert_eq!(v["cells"][0]["species"], "A");
        assert_eq!(v["tree"]["span"][1], 28 * 2 + 6);
    }

    proptest! {
        #[test]
        fn length_recursion(n in 4usize..=16, k in 0u32..=3) {
            let l = build_layout(&LayoutConfig::new(n, k, 1, "bare")).unwrap();
            let k = k as i32;
            prop_assert_eq!(l.len(), block_len(n, k));
            if k >= 1 {
                prop_assert_eq!(block_len(n, k), n * block_len(n, k - 1) + (n - 1) * interconnect_len(n, k - 1));
            }
            prop_assert_eq!(interconnect_len(n, k), 2 + block_len(n, k - 1));
            prop_assert!(verify_layout_invariants(&l).pass);
        }

        #[test]
        fn every_interconnect_has_two_c(n in 4usize..=8, k in 0u32..=2, blocks in 1usize..=3) {
            let l = build_layout(&LayoutConfig::new(n, k, blocks, "bare")).unwrap();
            for lev in 0..=k as i32 {
                let mut nodes = Vec::new();
                l.tree.visit(&mut |nd| if nd.kind == (NodeKind::Interconnect { level: lev }) { nodes.push(nd.clone()) });
                for nd in nodes {
                    let c = nd.children.iter().filter(|c| c.kind == NodeKind::CCell).count();
                    prop_assert_eq!(c, 2);
                }
            }
            prop_assert!(l.runs(Species::C).iter().all(|r| r.len() == 1));
        }

        #[test]
        fn deterministic(n in 2usize..=10, k in 0u32..=2, blocks in 1usize..=3) {
            let cfg = LayoutConfig::new(n, k, blocks, "bare");
            prop_assert_eq!(build_layout(&cfg).unwrap(), build_layout(&cfg).unwrap());
        }
    }
}
