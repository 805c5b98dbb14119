//! Building modified glued-trees instances.
//!
//! Internal vertex ids are laid out as
//!
//! * the left glued tree in heap order, id 0 being ENTRANCE;
//! * the right glued tree in heap order, its root being EXIT;
//! * the non-root nodes of the depth-`2k` pointer tree rooted at ENTRANCE,
//!   in heap order;
//! * the three markers.
//!
//! Labels are a uniform bijection from ids onto `[1, n]`, and every
//! neighbour list is stored in a uniformly random order. Only labels leave
//! this module.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Error, Result};

/// Largest depth parameter the builder accepts.
pub const MAX_K: u32 = 12;

/// Largest degree over the promise set.
pub const MAX_DEGREE: usize = 5;

/// A vertex label in `[1, n]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Label(pub u32);

impl Label {
    fn slot(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Whether the markers hang off EXIT (`B`, degree-5 vertex present) or are
/// isolated (`A`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    A,
    B,
}

impl Variant {
    pub fn has_degree5(self) -> bool {
        self == Variant::B
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::A => "A",
            Variant::B => "B",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Variant::A),
            "B" | "b" => Ok(Variant::B),
            _ => Err(Error::Parse(format!("variant must be A or B, got {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Role {
    Pointer,
    Tree,
    Entrance,
    Glued,
    Exit,
    Marker,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GluedParams {
    k: u32,
    variant: Variant,
    seed: u64,
}

impl GluedParams {
    pub fn new(k: u32, variant: Variant, seed: u64) -> Result<Self> {
        if k < 2 || !k.is_multiple_of(2) {
            return Err(Error::InvalidDepth(k));
        }
        if k > MAX_K {
            return Err(Error::TooLarge(format!("k = {k} exceeds {MAX_K}")));
        }
        Ok(Self { k, variant, seed })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// `2^{2k+1} + 2^{k+2} - 1`.
pub fn vertex_count(k: u32) -> u64 {
    (1u64 << (2 * k + 1)) + (1u64 << (k + 2)) - 1
}

/// Vertices of the glued-trees part, `2(2^{k+1} - 1)`.
pub fn glued_vertex_count(k: u32) -> u64 {
    2 * ((1u64 << (k + 1)) - 1)
}

const NO_COLUMN: u8 = u8::MAX;

#[derive(Clone, Debug)]
pub struct GluedInstance {
    params: GluedParams,
    n: u32,
    adj: Vec<[Label; MAX_DEGREE]>,
    deg: Vec<u8>,
    role: Vec<Role>,
    column: Vec<u8>,
    entrance: Label,
    exit: Label,
    markers: [Label; 3],
    columns: Vec<Vec<Label>>,
    glued_only: bool,
}

/// Adjacency under construction, by internal id.
struct IdGraph {
    adj: Vec<[u32; MAX_DEGREE]>,
    deg: Vec<u8>,
}

impl IdGraph {
    fn new(n: usize) -> Self {
        Self {
            adj: vec![[0; MAX_DEGREE]; n],
            deg: vec![0; n],
        }
    }

    fn add_edge(&mut self, a: u32, b: u32) {
        for (u, v) in [(a, b), (b, a)] {
            let d = &mut self.deg[u as usize];
            self.adj[u as usize][*d as usize] = v;
            *d += 1;
        }
    }
}

pub fn build_instance(params: GluedParams) -> Result<GluedInstance> {
    let k = params.k;
    let n = vertex_count(k) as usize;
    let tree = (1usize << (k + 1)) - 1;
    let right0 = tree;
    let ptr0 = 2 * tree;
    let ptr_nodes = (1usize << (2 * k + 1)) - 1;
    let marker0 = ptr0 + ptr_nodes - 1;
    debug_assert_eq!(marker0 + 3, n);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut g = IdGraph::new(n);
    let mut role = vec![Role::Tree; n];
    let mut column = vec![NO_COLUMN; n];

    let depth = |h: usize| (usize::BITS - 1 - (h + 1).leading_zeros()) as usize;
    for h in 0..tree {
        let d = depth(h);
        column[h] = d as u8;
        column[right0 + h] = (2 * k as usize + 1 - d) as u8;
        if d == k as usize {
            role[h] = Role::Glued;
            role[right0 + h] = Role::Glued;
        }
        if h > 0 {
            let parent = (h - 1) / 2;
            g.add_edge(parent as u32, h as u32);
            g.add_edge((right0 + parent) as u32, (right0 + h) as u32);
        }
    }
    role[0] = Role::Entrance;
    role[right0] = Role::Exit;

    // Random alternating cycle through the leaves of both trees.
    let leaves = (1usize << k) - 1..tree;
    let mut left: Vec<u32> = leaves.clone().map(|h| h as u32).collect();
    let mut right: Vec<u32> = leaves.map(|h| (right0 + h) as u32).collect();
    left.shuffle(&mut rng);
    right.shuffle(&mut rng);
    let m = left.len();
    for i in 0..m {
        g.add_edge(left[i], right[i]);
        g.add_edge(right[i], left[(i + 1) % m]);
    }

    // Pointer tree: heap index 0 is ENTRANCE, index h >= 1 is id ptr0 + h - 1.
    let ptr_id = |h: usize| if h == 0 { 0 } else { ptr0 + h - 1 };
    let first_leaf = (1usize << (2 * k)) - 1;
    for h in 1..ptr_nodes {
        g.add_edge(ptr_id((h - 1) / 2) as u32, ptr_id(h) as u32);
        if h >= first_leaf {
            role[ptr_id(h)] = Role::Pointer;
        }
    }

    for j in 0..3 {
        role[marker0 + j] = Role::Marker;
        if params.variant == Variant::B {
            g.add_edge(right0 as u32, (marker0 + j) as u32);
        }
    }

    let mut label_of: Vec<u32> = (1..=n as u32).collect();
    label_of.shuffle(&mut rng);

    let mut adj = vec![[Label(0); MAX_DEGREE]; n];
    let mut deg = vec![0u8; n];
    let mut role_l = vec![Role::Tree; n];
    let mut column_l = vec![NO_COLUMN; n];
    for id in 0..n {
        let slot = label_of[id] as usize - 1;
        let d = g.deg[id] as usize;
        let nbrs = &mut adj[slot][..d];
        for (dst, &v) in nbrs.iter_mut().zip(&g.adj[id][..d]) {
            *dst = Label(label_of[v as usize]);
        }
        nbrs.shuffle(&mut rng);
        deg[slot] = d as u8;
        role_l[slot] = role[id];
        column_l[slot] = column[id];
    }

    let mut columns = vec![Vec::new(); 2 * k as usize + 2];
    for (slot, &c) in column_l.iter().enumerate() {
        if c != NO_COLUMN {
            columns[c as usize].push(Label(slot as u32 + 1));
        }
    }

    Ok(GluedInstance {
        params,
        n: n as u32,
        adj,
        deg,
        role: role_l,
        column: column_l,
        entrance: Label(label_of[0]),
        exit: Label(label_of[right0]),
        markers: [0, 1, 2].map(|j| Label(label_of[marker0 + j])),
        columns,
        glued_only: false,
    })
}

impl GluedInstance {
    pub fn params(&self) -> GluedParams {
        self.params
    }

    pub fn k(&self) -> u32 {
        self.params.k
    }

    pub fn variant(&self) -> Variant {
        self.params.variant
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn entrance(&self) -> Label {
        self.entrance
    }

    pub fn exit(&self) -> Label {
        self.exit
    }

    pub fn markers(&self) -> [Label; 3] {
        self.markers
    }

    /// True for the bare glued-trees view produced by [`Self::glued_only`].
    pub fn is_glued_only(&self) -> bool {
        self.glued_only
    }

    pub fn check_label(&self, u: Label) -> Result<()> {
        if u.0 == 0 || u.0 > self.n {
            return Err(Error::LabelOutOfRange {
                label: u.0,
                n: self.n,
            });
        }
        Ok(())
    }

    /// Neighbours of `u` in slot order.
    pub fn neighbors(&self, u: Label) -> Result<&[Label]> {
        self.check_label(u)?;
        Ok(&self.adj[u.slot()][..self.deg[u.slot()] as usize])
    }

    pub fn degree(&self, u: Label) -> Result<usize> {
        self.check_label(u)?;
        Ok(self.deg[u.slot()] as usize)
    }

    pub fn role(&self, u: Label) -> Result<Role> {
        self.check_label(u)?;
        Ok(self.role[u.slot()])
    }

    /// Column of a glued-trees vertex, counted from ENTRANCE (column 0) to
    /// EXIT (column `2k + 1`).
    pub fn column(&self, u: Label) -> Result<Option<usize>> {
        self.check_label(u)?;
        let c = self.column[u.slot()];
        Ok((c != NO_COLUMN).then_some(c as usize))
    }

    /// Vertices of each column, in label order.
    pub fn columns(&self) -> &[Vec<Label>] {
        &self.columns
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> {
        (1..=self.n).map(Label)
    }

    pub fn has_degree5(&self) -> bool {
        self.deg.contains(&5)
    }

    pub fn pointer_count(&self) -> u64 {
        self.role.iter().filter(|&&r| r == Role::Pointer).count() as u64
    }

    /// Chance that a uniformly random label is a POINTER.
    pub fn pointer_hit_probability(&self) -> Ratio<u64> {
        Ratio::new(self.pointer_count(), self.n as u64)
    }

    /// The same ratio over non-marker vertices only.
    pub fn pointer_fraction_without_markers(&self) -> Ratio<u64> {
        Ratio::new(self.pointer_count(), self.n as u64 - 3)
    }

    /// Number of vertices per (role, degree).
    pub fn degree_census(&self) -> BTreeMap<(Role, usize), u64> {
        let mut census = BTreeMap::new();
        for (r, &d) in self.role.iter().zip(&self.deg) {
            *census.entry((*r, d as usize)).or_insert(0) += 1;
        }
        census
    }

    /// The glued-trees graph alone on the same labels: the pointer tree and
    /// markers become unused labels, and ENTRANCE and EXIT keep only their
    /// glued-tree neighbours, in their original relative order.
    pub fn glued_only(&self) -> GluedInstance {
        let mut out = self.clone();
        for slot in 0..self.n as usize {
            if self.column[slot] == NO_COLUMN {
                out.deg[slot] = 0;
                out.adj[slot] = [Label(0); MAX_DEGREE];
                continue;
            }
            let kept: Vec<Label> = self.adj[slot][..self.deg[slot] as usize]
                .iter()
                .copied()
                .filter(|v| self.column[v.slot()] != NO_COLUMN)
                .collect();
            out.adj[slot] = [Label(0); MAX_DEGREE];
            out.adj[slot][..kept.len()].copy_from_slice(&kept);
            out.deg[slot] = kept.len() as u8;
        }
        out.glued_only = true;
        out
    }

    /// Header line plus, optionally, one `label: neighbours` line per vertex.
    pub fn to_text(&self, with_adjacency: bool) -> String {
        let mut s = format!(
            "k={} variant={} seed={} n={}\n",
            self.params.k, self.params.variant, self.params.seed, self.n
        );
        if with_adjacency {
            for u in self.labels() {
                let nbrs: Vec<String> = self
                    .neighbors(u)
                    .expect("own label")
                    .iter()
                    .map(|v| v.to_string())
                    .collect();
                s.push_str(&format!("{u}: {}\n", nbrs.join(" ")));
            }
        }
        s
    }

    /// Rebuilds from the header and checks any adjacency lines against the
    /// rebuilt instance.
    pub fn from_text(text: &str) -> Result<GluedInstance> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty instance file".into()))?;
        let mut fields = BTreeMap::new();
        for part in header.split_whitespace() {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field {part:?}")))?;
            fields.insert(key, value);
        }
        let get = |key: &str| {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| Error::Parse(format!("header lacks {key}")))
        };
        let num = |key: &str| -> Result<u64> {
            get(key)?
                .parse()
                .map_err(|_| Error::Parse(format!("bad {key} in header")))
        };
        let params = GluedParams::new(num("k")? as u32, get("variant")?.parse()?, num("seed")?)?;
        let inst = build_instance(params)?;
        if num("n")? != inst.n as u64 {
            return Err(Error::Parse("header n does not match k".into()));
        }
        for line in lines {
            let (u, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad adjacency line {line:?}")))?;
            let u: u32 = u
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad label in {line:?}")))?;
            let nbrs = rest
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map(Label)
                        .map_err(|_| Error::Parse(format!("bad label in {line:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if inst.neighbors(Label(u))? != nbrs.as_slice() {
                return Err(Error::Parse(format!(
                    "adjacency of {u} differs from the rebuilt instance"
                )));
            }
        }
        Ok(inst)
    }
}

/// The census every instance must have: POINTER 1, TREE 3, GLUED 3,
/// ENTRANCE 4, EXIT 2 or 5, MARKER 0 or 1.
pub fn expected_census(k: u32, variant: Variant) -> BTreeMap<(Role, usize), u64> {
    let tree_internal = (1u64 << k) - 2; // per glued tree, excluding the root
    let ptr_internal = (1u64 << (2 * k)) - 2; // excluding ENTRANCE
    let (exit_deg, marker_deg) = match variant {
        Variant::A => (2, 0),
        Variant::B => (5, 1),
    };
    BTreeMap::from([
        ((Role::Pointer, 1), 1u64 << (2 * k)),
        ((Role::Tree, 3), 2 * tree_internal + ptr_internal),
        ((Role::Glued, 3), 2 * (1u64 << k)),
        ((Role::Entrance, 4), 1),
        ((Role::Exit, exit_deg), 1),
        ((Role::Marker, marker_deg), 3),
    ])
}
