//! Mesh layouts: ordered MZI columns and fixed waveguide permutations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One vertical slice of a mesh.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    /// MZIs coupling waveguides `(t, t + 1)` for each 0-based top index `t`,
    /// ascending and pairwise at least 2 apart.
    Mzi(Vec<usize>),
    /// Fixed routing: light on waveguide `i` leaves on waveguide `mapping[i]`.
    Perm(Vec<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Rectangular,
    Triangular,
    Permuting,
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Architecture::Rectangular => "rectangular",
            Architecture::Triangular => "triangular",
            Architecture::Permuting => "permuting",
        })
    }
}

/// Position of one MZI: index into [`MeshSpec::layers`] and its top waveguide.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MziSite {
    pub layer: usize,
    pub top: usize,
}

/// A validated mesh layout.
///
/// MZIs are numbered layer-major, then by ascending top index. Every per-MZI
/// array in the crate (phases, errors, sensitivity indices) uses this order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeshSpec {
    n: usize,
    arch: Architecture,
    layers: Vec<Layer>,
    sites: Vec<MziSite>,
    layer_offsets: Vec<usize>,
}

impl MeshSpec {
    /// Builds a spec from raw layers, checking every layout invariant.
    pub fn new(n: usize, arch: Architecture, layers: Vec<Layer>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("mesh needs at least 2 waveguides, got {n}")));
        }
        let mut sites = Vec::new();
        let mut layer_offsets = Vec::with_capacity(layers.len() + 1);
        for (li, layer) in layers.iter().enumerate() {
            layer_offsets.push(sites.len());
            match layer {
                Layer::Mzi(tops) => {
                    for (k, &t) in tops.iter().enumerate() {
                        if t + 1 >= n {
                            return Err(Error::Validation(format!(
                                "layer {li}: top index {t} leaves no partner waveguide (n = {n})"
                            )));
                        }
                        if k > 0 && t < tops[k - 1] + 2 {
                            return Err(Error::Validation(format!(
                                "layer {li}: top indices must ascend with spacing >= 2"
                            )));
                        }
                        sites.push(MziSite { layer: li, top: t });
                    }
                }
                Layer::Perm(map) => {
                    let mut seen = vec![false; n];
                    if map.len() != n {
                        return Err(Error::Validation(format!(
                            "layer {li}: permutation has {} entries for {n} waveguides",
                            map.len()
                        )));
                    }
                    for &m in map {
                        if m >= n || std::mem::replace(&mut seen[m], true) {
                            return Err(Error::Validation(format!(
                                "layer {li}: mapping is not a bijection"
                            )));
                        }
                    }
                }
            }
        }
        layer_offsets.push(sites.len());
        Ok(Self {
            n,
            arch,
            layers,
            sites,
            layer_offsets,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_mzis(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[MziSite] {
        &self.sites
    }

    /// Index of the first MZI of `layer` in the global MZI order.
    pub fn layer_offset(&self, layer: usize) -> usize {
        self.layer_offsets[layer]
    }

    /// Global index of the MZI at (`layer`, `top`), if there is one.
    pub fn mzi_index(&self, layer: usize, top: usize) -> Option<usize> {
        match self.layers.get(layer)? {
            Layer::Mzi(tops) => tops
                .binary_search(&top)
                .ok()
                .map(|k| self.layer_offsets[layer] + k),
            Layer::Perm(_) => None,
        }
    }

    /// Number of tunable (MZI) columns.
    pub fn tunable_columns(&self) -> usize {
        self.layers.iter().filter(|l| matches!(l, Layer::Mzi(_))).count()
    }

    /// Columns of waveguide crossings needed to realize the fixed permutations,
    /// taken as the largest displacement of each permutation.
    pub fn crossing_columns(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Perm(map) => map
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| i.abs_diff(m))
                    .max()
                    .unwrap_or(0),
                Layer::Mzi(_) => 0,
            })
            .sum()
    }

    /// Physical depth with permutations drawn as crossing columns.
    pub fn depth_with_crossings(&self) -> usize {
        self.tunable_columns() + self.crossing_columns()
    }

    /// Contiguous runs of MZI columns separated by permutation layers, as
    /// `(first layer, one past last layer)` pairs.
    pub fn tunable_blocks(&self) -> Vec<(usize, usize)> {
        let mut blocks = Vec::new();
        let mut start = None;
        for (i, l) in self.layers.iter().enumerate() {
            match (l, start) {
                (Layer::Mzi(_), None) => start = Some(i),
                (Layer::Perm(_), Some(s)) => {
                    blocks.push((s, i));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            blocks.push((s, self.layers.len()));
        }
        blocks
    }
}

/// Top indices of MZI column `col` (0-based) of a rectangular mesh: those with
/// the same parity as the column.
pub(crate) fn rectangular_column(n: usize, col: usize) -> Vec<usize> {
    (col % 2..n - 1).step_by(2).collect()
}

/// Rectangular mesh with `l` MZI columns; `l = n` is the standard universal
/// mesh and `l > n` a redundant one.
pub fn rectangular_spec(n: usize, l: usize) -> Result<MeshSpec> {
    if n < 2 || l < 1 {
        return Err(Error::Domain(format!("rectangular mesh needs n >= 2, l >= 1 (got {n}, {l})")));
    }
    let layers = (0..l).map(|c| Layer::Mzi(rectangular_column(n, c))).collect();
    MeshSpec::new(n, Architecture::Rectangular, layers)
}

/// Triangular mesh with `2n - 3` columns and `n(n - 1)/2` MZIs.
///
/// The MZI with 1-based top index `k` appears in the columns
/// `n - k, n - k + 2, ..., n + k - 2`, so the bottom row is full and the apex
/// (top index 1) sits alone in column `n - 1`. Light entering waveguide 0 then
/// meets exactly one MZI per row, the last MZI of each row.
pub fn triangular_spec(n: usize) -> Result<MeshSpec> {
    if n < 2 {
        return Err(Error::Domain(format!("triangular mesh needs n >= 2, got {n}")));
    }
    let layers = (1..=2 * n - 3)
        .map(|col| {
            let tops = (1..n)
                .filter(|&k| {
                    (col + k) % 2 == n % 2 && col + k >= n && col + 2 <= n + k
                })
                .map(|k| k - 1)
                .collect();
            Layer::Mzi(tops)
        })
        .collect();
    MeshSpec::new(n, Architecture::Triangular, layers)
}

/// Routing of `2^k` consecutive columns of cross-state MZIs laid out like a
/// rectangular mesh, the first column coupling tops of parity `first_parity`.
///
/// Light moves one waveguide per column (even-parity tops down, the others
/// up, reflecting at the edges), so no input travels more than `2^k`.
pub fn rectangular_permutation(n: usize, k: usize, first_parity: usize) -> Result<Vec<usize>> {
    let depth = 1usize
        .checked_shl(k as u32)
        .filter(|&d| d < n)
        .ok_or_else(|| Error::Domain(format!("P_{k} needs 2^{k} < {n}")))?;
    // holder[w] = input currently on waveguide w
    let mut holder: Vec<usize> = (0..n).collect();
    for c in 0..depth {
        for t in rectangular_column(n, c + first_parity) {
            holder.swap(t, t + 1);
        }
    }
    let mut map = vec![0; n];
    for (w, &input) in holder.iter().enumerate() {
        map[input] = w;
    }
    Ok(map)
}

/// Default permutation order: even `k` ascending, then odd `k` descending,
/// so the widest permutations sit mid-mesh (`[2, 4, 6, 5, 3, 1]` for 128 waveguides).
pub fn default_block_order(k_total: usize) -> Vec<usize> {
    let ks = 1..k_total;
    let evens = ks.clone().filter(|k| k % 2 == 0);
    let odds = ks.filter(|k| k % 2 == 1).rev();
    evens.chain(odds).collect()
}

/// Permuting rectangular mesh on `n = 2^K` waveguides.
///
/// `K` blocks of `ceil(n/K)` rectangular columns (the last block truncated so
/// there are `n` tunable columns in all), with the fixed permutation
/// `P_{order[j]}` between block `j` and block `j + 1`. Every `P_k` is the
/// routing of `2^k` cross-state columns (see [`rectangular_permutation`]).
/// Column parity follows the global column index; since each `P_k` spans an
/// even number of columns, crossings do not shift the parity of later blocks.
pub fn permuting_spec(n: usize, order: Option<&[usize]>) -> Result<MeshSpec> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Unsupported(format!(
            "permuting mesh needs a power-of-two size >= 2, got {n}"
        )));
    }
    let k_total = n.trailing_zeros() as usize;
    let order = match order {
        Some(o) => o.to_vec(),
        None => default_block_order(k_total),
    };
    let mut sorted = order.clone();
    sorted.sort_unstable();
    if sorted != (1..k_total).collect::<Vec<_>>() {
        return Err(Error::Validation(format!(
            "block order {order:?} is not a permutation of 1..{}",
            k_total - 1
        )));
    }
    let block = n.div_ceil(k_total);
    let mut layers = Vec::with_capacity(n + k_total - 1);
    let mut col = 0;
    for b in 0..k_total {
        let end = ((b + 1) * block).min(n);
        while col < end {
            layers.push(Layer::Mzi(rectangular_column(n, col)));
            col += 1;
        }
        if b + 1 < k_total {
            layers.push(Layer::Perm(rectangular_permutation(n, order[b], col % 2)?));
        }
    }
    MeshSpec::new(n, Architecture::Permuting, layers)
}
