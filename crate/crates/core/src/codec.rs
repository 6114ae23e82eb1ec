//! Bit blocks, homopolymer-run encodings and molecule specifications.
//!
//! A [`RunEncoding`] maps each bit symbol to a homopolymer run `(base, length)`.
//! Encoding concatenates runs; when two consecutive symbols are equal their runs
//! share a base and coalesce into one maximal run, so decoding splits a run whose
//! length is an integer multiple of the symbol's run length.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A nucleotide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Base {
    A,
    C,
    G,
    T,
}

impl Base {
    pub const ALL: [Base; 4] = [Base::A, Base::C, Base::G, Base::T];

    pub fn as_char(self) -> char {
        match self {
            Base::A => 'A',
            Base::C => 'C',
            Base::G => 'G',
            Base::T => 'T',
        }
    }

    pub fn from_char(c: char) -> Option<Base> {
        match c.to_ascii_uppercase() {
            'A' => Some(Base::A),
            'C' => Some(Base::C),
            'G' => Some(Base::G),
            'T' => Some(Base::T),
            _ => None,
        }
    }

    fn two_bits(self) -> (u8, u8) {
        match self {
            Base::A => (0, 0),
            Base::C => (0, 1),
            Base::G => (1, 0),
            Base::T => (1, 1),
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Base {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.trim().chars();
        match (chars.next().and_then(Base::from_char), chars.next()) {
            (Some(b), None) => Ok(b),
            _ => Err(Error::Parse(format!("not a base: {s:?}"))),
        }
    }
}

/// Ordered binary user data.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitBlock(Vec<bool>);

impl BitBlock {
    pub fn new(bits: Vec<bool>) -> Self {
        BitBlock(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_zeros(&self) -> usize {
        self.0.iter().filter(|b| !**b).count()
    }
}

impl FromStr for BitBlock {
    type Err = Error;

    /// Parses a string of `0`/`1` characters; whitespace is ignored.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("non-binary symbol {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitBlock)
    }
}

impl fmt::Display for BitBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// One homopolymer run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Run {
    pub base: Base,
    pub count: u32,
}

impl Run {
    pub fn new(base: Base, count: u32) -> Self {
        Run { base, count }
    }
}

/// Mapping from the two bit symbols to homopolymer runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunEncoding {
    zero: Run,
    one: Run,
}

impl RunEncoding {
    /// Builds a scheme, rejecting zero-length runs and symbols sharing a base.
    pub fn new(zero: Run, one: Run) -> Result<Self> {
        if zero.count == 0 || one.count == 0 {
            return Err(Error::Config("run lengths must be at least 1".into()));
        }
        if zero.base == one.base {
            return Err(Error::Config(format!(
                "ambiguous scheme: both symbols map to base {}",
                zero.base
            )));
        }
        Ok(RunEncoding { zero, one })
    }

    /// `0 -> A x20`, `1 -> C x30`.
    pub fn a20_c30() -> Self {
        RunEncoding {
            zero: Run::new(Base::A, 20),
            one: Run::new(Base::C, 30),
        }
    }

    /// `0 -> A x50`, `1 -> C x100`: the block `01` encodes `5'A50C100 3'`.
    pub fn a50_c100() -> Self {
        RunEncoding {
            zero: Run::new(Base::A, 50),
            one: Run::new(Base::C, 100),
        }
    }

    pub fn zero(&self) -> Run {
        self.zero
    }

    pub fn one(&self) -> Run {
        self.one
    }

    pub fn run_for(&self, bit: bool) -> Run {
        if bit {
            self.one
        } else {
            self.zero
        }
    }

    /// Symbol and per-symbol run length for a base, if the scheme uses it.
    pub fn symbol_for(&self, base: Base) -> Option<(bool, u32)> {
        if base == self.zero.base {
            Some((false, self.zero.count))
        } else if base == self.one.base {
            Some((true, self.one.count))
        } else {
            None
        }
    }
}

impl Default for RunEncoding {
    fn default() -> Self {
        RunEncoding::a50_c100()
    }
}

/// A single-stranded molecule as maximal homopolymer runs, listed 5' to 3'.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MoleculeSpec {
    runs: Vec<Run>,
}

impl MoleculeSpec {
    /// Builds a molecule, coalescing adjacent runs of the same base and
    /// dropping zero-length runs.
    pub fn from_runs<I: IntoIterator<Item = Run>>(runs: I) -> Self {
        let mut out: Vec<Run> = Vec::new();
        for run in runs.into_iter().filter(|r| r.count > 0) {
            match out.last_mut() {
                Some(last) if last.base == run.base => last.count += run.count,
                _ => out.push(run),
            }
        }
        MoleculeSpec { runs: out }
    }

    /// Parses a base string written 5' to 3'.
    pub fn from_sequence(seq: &str) -> Result<Self> {
        let bases = parse_bases(seq)?;
        Ok(MoleculeSpec::from_runs(
            bases.into_iter().map(|b| Run::new(b, 1)),
        ))
    }

    /// The `5'A50C100 3'` probe molecule.
    pub fn a50_c100() -> Self {
        MoleculeSpec::from_runs([Run::new(Base::A, 50), Run::new(Base::C, 100)])
    }

    /// `5'(AC)n 3'`: `2n` alternating single-base runs.
    pub fn ac_repeat(n: u32) -> Self {
        MoleculeSpec::from_runs((0..n).flat_map(|_| [Run::new(Base::A, 1), Run::new(Base::C, 1)]))
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn total_bases(&self) -> u32 {
        self.runs.iter().map(|r| r.count).sum()
    }

    /// Bases written 5' to 3'.
    pub fn sequence(&self) -> String {
        self.runs
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.base.as_char(), r.count as usize))
            .collect()
    }
}

/// Encodes a bit block as a molecule.
pub fn encode_bits(block: &BitBlock, scheme: &RunEncoding) -> MoleculeSpec {
    MoleculeSpec::from_runs(block.bits().iter().map(|&b| scheme.run_for(b)))
}

/// Decodes a molecule back into bits. Errors carry the index of the first run
/// that does not correspond to a whole number of scheme symbols.
pub fn decode_runs(mol: &MoleculeSpec, scheme: &RunEncoding) -> Result<BitBlock> {
    let mut bits = Vec::new();
    for (index, run) in mol.runs().iter().enumerate() {
        let (symbol, len) = scheme.symbol_for(run.base).ok_or_else(|| Error::Decode {
            run: index,
            reason: format!("base {} not in scheme", run.base),
        })?;
        if run.count % len != 0 {
            return Err(Error::Decode {
                run: index,
                reason: format!("length {} is not a multiple of {len}", run.count),
            });
        }
        bits.extend(std::iter::repeat_n(symbol, (run.count / len) as usize));
    }
    Ok(BitBlock::new(bits))
}

/// Two bits per base: `A=00, C=01, G=10, T=11`.
pub fn nucleotide_pack(bases: &[Base]) -> BitBlock {
    let mut bits = Vec::with_capacity(bases.len() * 2);
    for b in bases {
        let (hi, lo) = b.two_bits();
        bits.push(hi == 1);
        bits.push(lo == 1);
    }
    BitBlock::new(bits)
}

pub fn nucleotide_unpack(block: &BitBlock) -> Result<Vec<Base>> {
    if block.len() % 2 != 0 {
        return Err(Error::Framing(format!(
            "odd bit length {} cannot be split into bases",
            block.len()
        )));
    }
    Ok(block
        .bits()
        .chunks_exact(2)
        .map(|pair| match (pair[0], pair[1]) {
            (false, false) => Base::A,
            (false, true) => Base::C,
            (true, false) => Base::G,
            (true, true) => Base::T,
        })
        .collect())
}

pub fn parse_bases(seq: &str) -> Result<Vec<Base>> {
    seq.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| Base::from_char(c).ok_or_else(|| Error::Parse(format!("not a base: {c:?}"))))
        .collect()
}

/// Writes molecules as FASTA-style records, one sequence line per record.
pub fn write_molecules<'a, I>(records: I) -> String
where
    I: IntoIterator<Item = (&'a str, &'a MoleculeSpec)>,
{
    let mut out = String::new();
    for (name, mol) in records {
        out.push('>');
        out.push_str(name);
        out.push('\n');
        out.push_str(&mol.sequence());
        out.push('\n');
    }
    out
}

/// Parses FASTA-style records; sequence lines may wrap.
pub fn read_molecules(text: &str) -> Result<Vec<(String, MoleculeSpec)>> {
    let mut records: Vec<(String, String)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('>') {
            records.push((name.trim().to_string(), String::new()));
        } else {
            match records.last_mut() {
                Some((_, seq)) => seq.push_str(line),
                None => {
                    return Err(Error::Parse(format!(
                        "line {}: sequence before any '>' header",
                        lineno + 1
                    )))
                }
            }
        }
    }
    records
        .into_iter()
        .map(|(name, seq)| Ok((name, MoleculeSpec::from_sequence(&seq)?)))
        .collect()
}
