//! Finitely generated discrete groups with word-length functions.
//!
//! Three closed families are supported: the integers, lattices `Z^d` and free
//! groups `F_k`. Lattice elements are coordinate tuples; free-group elements
//! are reduced words whose letters are encoded as nonzero integers (`+j` for
//! the `j`-th generator, `-j` for its inverse, `j` starting at 1).
//!
//! Balls are enumerated by breadth-first search on the Cayley graph and sorted
//! by `(c(g), representation)`, where representations compare
//! lexicographically as integer tuples. Since `B_R` is exactly the set of
//! elements of length at most `R`, this order makes `ball(R)` a prefix of
//! `ball(R + 1)`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A group element in the model's normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element(pub Vec<i32>);

impl Element {
    pub fn as_slice(&self) -> &[i32] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupModel {
    /// The integers with `S = {+1, -1}`.
    Integers,
    /// `Z^d` with `S = {±e_1, ..., ±e_d}`.
    Lattice { d: usize },
    /// The free group on `k >= 2` letters with `S` the letters and their inverses.
    Free { k: usize },
}

impl GroupModel {
    pub fn integers() -> Self {
        GroupModel::Integers
    }

    pub fn lattice(d: usize) -> Result<Self> {
        match d {
            0 => Err(Error::Config("lattice rank must be at least 1".into())),
            1 => Ok(GroupModel::Integers),
            _ => Ok(GroupModel::Lattice { d }),
        }
    }

    pub fn free(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!(
                "free group rank must be at least 2, got {k}"
            )));
        }
        Ok(GroupModel::Free { k })
    }

    /// Number of free generators (`d` for lattices, `k` for free groups).
    pub fn rank(&self) -> usize {
        match *self {
            GroupModel::Integers => 1,
            GroupModel::Lattice { d } => d,
            GroupModel::Free { k } => k,
        }
    }

    pub fn is_abelian(&self) -> bool {
        !matches!(self, GroupModel::Free { .. })
    }

    pub fn family_name(&self) -> String {
        match *self {
            GroupModel::Integers => "Z".into(),
            GroupModel::Lattice { d } => format!("Z^{d}"),
            GroupModel::Free { k } => format!("F_{k}"),
        }
    }

    pub fn identity(&self) -> Element {
        if self.is_abelian() {
            Element(vec![0; self.rank()])
        } else {
            Element(Vec::new())
        }
    }

    pub fn is_identity(&self, g: &Element) -> bool {
        if self.is_abelian() {
            g.0.iter().all(|&x| x == 0)
        } else {
            g.0.is_empty()
        }
    }

    /// Checks that `g` is in normal form for this model.
    pub fn validate(&self, g: &Element) -> Result<()> {
        match *self {
            GroupModel::Integers | GroupModel::Lattice { .. } => {
                if g.0.len() != self.rank() {
                    return Err(Error::InvalidElement(format!(
                        "expected {} coordinates, got {}",
                        self.rank(),
                        g.0.len()
                    )));
                }
            }
            GroupModel::Free { k } => {
                for w in g.0.windows(2) {
                    if w[0] == -w[1] {
                        return Err(Error::InvalidElement(format!(
                            "word {:?} is not reduced",
                            g.0
                        )));
                    }
                }
                if let Some(&bad) = g.0.iter().find(|&&x| x == 0 || x.unsigned_abs() as usize > k) {
                    return Err(Error::InvalidElement(format!(
                        "letter code {bad} outside 1..={k}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The `i`-th free generator (0-based): `e_i` for lattices, the `i`-th letter
    /// for free groups.
    pub fn generator(&self, i: usize) -> Element {
        assert!(i < self.rank(), "generator index {i} out of range");
        if self.is_abelian() {
            let mut v = vec![0; self.rank()];
            v[i] = 1;
            Element(v)
        } else {
            Element(vec![i as i32 + 1])
        }
    }

    /// The symmetric generating set in canonical order `g_1, g_1^-1, g_2, g_2^-1, ...`.
    pub fn generators(&self) -> Vec<Element> {
        (0..self.rank())
            .flat_map(|i| {
                let g = self.generator(i);
                let gi = self.inverse(&g);
                [g, gi]
            })
            .collect()
    }

    pub fn multiply(&self, g: &Element, h: &Element) -> Element {
        if self.is_abelian() {
            Element(g.0.iter().zip(&h.0).map(|(a, b)| a + b).collect())
        } else {
            let mut word = g.0.clone();
            for &letter in &h.0 {
                if word.last() == Some(&-letter) {
                    word.pop();
                } else {
                    word.push(letter);
                }
            }
            Element(word)
        }
    }

    pub fn inverse(&self, g: &Element) -> Element {
        if self.is_abelian() {
            Element(g.0.iter().map(|x| -x).collect())
        } else {
            Element(g.0.iter().rev().map(|x| -x).collect())
        }
    }

    /// `g^-1 h`
    pub fn left_divide(&self, g: &Element, h: &Element) -> Element {
        self.multiply(&self.inverse(g), h)
    }

    /// Word length with respect to the canonical generators.
    ///
    /// For lattices this is the `l1` norm, for free groups the length of the
    /// reduced word; both coincide with the Cayley-graph distance to `e` that
    /// [`GroupModel::ball`] computes by breadth-first search.
    pub fn word_length(&self, g: &Element) -> u32 {
        if self.is_abelian() {
            g.0.iter().map(|x| x.unsigned_abs()).sum()
        } else {
            g.0.len() as u32
        }
    }

    /// All elements of length at most `radius`, in the canonical order.
    pub fn ball(&self, radius: u32, cap: usize) -> Result<Ball> {
        let gens = self.generators();
        let e = self.identity();
        let mut dist: HashMap<Element, u32> = HashMap::new();
        dist.insert(e.clone(), 0);
        let mut queue = VecDeque::from([e]);
        while let Some(g) = queue.pop_front() {
            let d = dist[&g];
            if d == radius {
                continue;
            }
            for s in &gens {
                let h = self.multiply(&g, s);
                if !dist.contains_key(&h) {
                    dist.insert(h.clone(), d + 1);
                    if dist.len() > cap {
                        return Err(Error::ResourceCap {
                            what: "ball size",
                            requested: dist.len(),
                            cap,
                        });
                    }
                    queue.push_back(h);
                }
            }
        }
        let mut entries: Vec<(u32, Element)> = dist.into_iter().map(|(g, d)| (d, g)).collect();
        entries.sort();
        let (lengths, elements): (Vec<u32>, Vec<Element>) = entries.into_iter().unzip();
        let index = elements
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i))
            .collect();
        Ok(Ball {
            radius,
            elements,
            lengths,
            index,
        })
    }

    /// Windowed version of `m_s = sup_t |c(t) - c(s^-1 t)|`.
    pub fn displacement(&self, s: &Element, ball: &Ball) -> Displacement {
        let sinv = self.inverse(s);
        let window_max = ball
            .iter()
            .map(|(t, ct)| {
                let shifted = self.word_length(&self.multiply(&sinv, t));
                ct.abs_diff(shifted)
            })
            .max()
            .unwrap_or(0);
        let bound = self.word_length(s);
        Displacement {
            radius: ball.radius,
            window_max,
            bound,
            attained: window_max == bound,
        }
    }

    /// Parses a word such as `"aBa"`: lowercase letters are generators,
    /// uppercase their inverses, `"e"` or `""` is the identity. The result is
    /// reduced.
    pub fn parse_word(&self, word: &str) -> Result<Element> {
        let GroupModel::Free { k } = *self else {
            return Err(Error::InvalidElement(format!(
                "word syntax only applies to free groups, not {}",
                self.family_name()
            )));
        };
        if word == "e" {
            return Ok(self.identity());
        }
        let mut g = self.identity();
        for ch in word.chars() {
            let code = match ch {
                'a'..='z' => (ch as u8 - b'a') as i32 + 1,
                'A'..='Z' => -((ch as u8 - b'A') as i32 + 1),
                _ => return Err(Error::InvalidElement(format!("bad letter {ch:?} in {word:?}"))),
            };
            if code.unsigned_abs() as usize > k {
                return Err(Error::InvalidElement(format!(
                    "letter {ch:?} exceeds rank {k}"
                )));
            }
            g = self.multiply(&g, &Element(vec![code]));
        }
        Ok(g)
    }

    pub fn from_coords(&self, coords: &[i64]) -> Result<Element> {
        if !self.is_abelian() {
            return Err(Error::InvalidElement(
                "coordinate syntax only applies to lattices".into(),
            ));
        }
        let g = Element(
            coords
                .iter()
                .map(|&x| i32::try_from(x).map_err(|_| Error::InvalidElement(format!("{x} out of range"))))
                .collect::<Result<_>>()?,
        );
        self.validate(&g)?;
        Ok(g)
    }

    pub fn display(&self, g: &Element) -> String {
        DisplayElement { model: *self, element: g }.to_string()
    }
}

struct DisplayElement<'a> {
    model: GroupModel,
    element: &'a Element,
}

impl fmt::Display for DisplayElement<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.model {
            GroupModel::Integers => write!(f, "{}", self.element.0[0]),
            GroupModel::Lattice { .. } => {
                let parts: Vec<String> = self.element.0.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            GroupModel::Free { .. } => {
                if self.element.0.is_empty() {
                    return write!(f, "e");
                }
                for &code in &self.element.0 {
                    let letter = (b'a' + (code.unsigned_abs() - 1) as u8) as char;
                    if code > 0 {
                        write!(f, "{letter}")?;
                    } else {
                        write!(f, "{}", letter.to_ascii_uppercase())?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// Finite window `B_R` of the group, used as the truncation of `l^2(G)`.
#[derive(Clone, Debug)]
pub struct Ball {
    radius: u32,
    elements: Vec<Element>,
    lengths: Vec<u32>,
    index: HashMap<Element, usize>,
}

impl Ball {
    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn element(&self, i: usize) -> &Element {
        &self.elements[i]
    }

    pub fn length(&self, i: usize) -> u32 {
        self.lengths[i]
    }

    pub fn position(&self, g: &Element) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn contains(&self, g: &Element) -> bool {
        self.index.contains_key(g)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Element, u32)> {
        self.elements.iter().zip(self.lengths.iter().copied())
    }

    /// Number of leading entries with length at most `r`, i.e. `|B_r|`.
    pub fn prefix_len(&self, r: u32) -> usize {
        self.lengths.partition_point(|&c| c <= r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Displacement {
    pub radius: u32,
    /// `max_{t in B_R} |c(t) - c(s^-1 t)|`
    pub window_max: u32,
    /// The triangle-inequality bound `c(s)`.
    pub bound: u32,
    pub attained: bool,
}
