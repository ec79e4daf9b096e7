//! Gate-kind encoding, block encryption and decoding into the basic EC.
//!
//! Bits are packed into bytes MSB first. The AES key of a run is drawn from
//! the caller's random source, used once and dropped; it is never part of
//! any returned value.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::aes;
use crate::error::{Error, Result};
use crate::nandnor::MappedNetlist;
use crate::netlist::{GateKind, Netlist};

pub const BLOCK_BITS: usize = 128;

/// Bijection between code bits and {NAND, NOR}, plus the order in which
/// gates are read into the plaintext.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodingScheme {
    pub bit_for_nand: bool,
    pub gate_order: Vec<usize>,
}

impl CodingScheme {
    pub fn new(bit_for_nand: bool, gate_order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; gate_order.len()];
        for &i in &gate_order {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(
                    "gate order is not a permutation".into(),
                ));
            }
        }
        Ok(CodingScheme {
            bit_for_nand,
            gate_order,
        })
    }

    pub fn bit_for_nor(&self) -> bool {
        !self.bit_for_nand
    }

    pub fn code(&self, kind: GateKind) -> Result<bool> {
        match kind {
            GateKind::Nand => Ok(self.bit_for_nand),
            GateKind::Nor => Ok(self.bit_for_nor()),
            k => Err(Error::Unsupported(format!("{k} has no code word"))),
        }
    }

    pub fn kind(&self, bit: bool) -> GateKind {
        if bit == self.bit_for_nand {
            GateKind::Nand
        } else {
            GateKind::Nor
        }
    }
}

pub fn make_coding_scheme<R: Rng + ?Sized>(g: usize, rng: &mut R) -> Result<CodingScheme> {
    if g == 0 {
        return Err(Error::InvalidArgument(
            "cannot build a coding scheme for zero gates".into(),
        ));
    }
    let bit_for_nand = rng.gen::<bool>();
    let mut gate_order: Vec<usize> = (0..g).collect();
    gate_order.shuffle(rng);
    Ok(CodingScheme {
        bit_for_nand,
        gate_order,
    })
}

/// Plaintext bit `i` is the code of gate `cs.gate_order[i]`.
pub fn encode(m: &MappedNetlist, cs: &CodingScheme) -> Result<Vec<bool>> {
    let gates = m.netlist().gates();
    if cs.gate_order.len() != gates.len() {
        return Err(Error::LengthMismatch {
            what: "coding scheme gate order",
            expected: gates.len(),
            actual: cs.gate_order.len(),
        });
    }
    cs.gate_order.iter().map(|&i| cs.code(gates[i].kind)).collect()
}

pub trait BlockCipher {
    fn encrypt_block(&mut self, block: &aes::Block) -> aes::Block;
}

struct Aes128 {
    key: aes::Key,
}

impl BlockCipher for Aes128 {
    fn encrypt_block(&mut self, block: &aes::Block) -> aes::Block {
        aes::encrypt_block(&self.key, block)
    }
}

/// Ciphers for deterministic experiments.
pub mod testing {
    use super::*;

    /// Returns every block unchanged.
    pub struct IdentityCipher;

    impl BlockCipher for IdentityCipher {
        fn encrypt_block(&mut self, block: &aes::Block) -> aes::Block {
            *block
        }
    }

    /// Ignores its input and emits a prescribed bit prefix (rest zero)
    /// for the first block, and zeros afterwards.
    pub struct FixedCipher {
        bits: Vec<bool>,
    }

    impl FixedCipher {
        pub fn from_bits(bits: &str) -> Result<Self> {
            let bits = super::parse_bits(bits)?;
            Ok(FixedCipher { bits })
        }
    }

    impl BlockCipher for FixedCipher {
        fn encrypt_block(&mut self, _block: &aes::Block) -> aes::Block {
            let take = self.bits.len().min(BLOCK_BITS);
            let mut bits: Vec<bool> = self.bits.drain(..take).collect();
            bits.resize(BLOCK_BITS, false);
            let mut out = [0u8; 16];
            out.copy_from_slice(&pack_bits(&bits));
            out
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "TraceJson", try_from = "TraceJson")]
pub struct EncryptionTrace {
    pub plaintext_len: usize,
    pub pad_len: usize,
    pub ciphertext: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct TraceJson {
    plaintext_len: usize,
    pad_len: usize,
    ciphertext_hex: String,
}

impl From<EncryptionTrace> for TraceJson {
    fn from(t: EncryptionTrace) -> Self {
        TraceJson {
            plaintext_len: t.plaintext_len,
            pad_len: t.pad_len,
            ciphertext_hex: to_hex(&pack_bits(&t.ciphertext)),
        }
    }
}

impl TryFrom<TraceJson> for EncryptionTrace {
    type Error = Error;

    fn try_from(j: TraceJson) -> Result<Self> {
        let bytes = from_hex(&j.ciphertext_hex)?;
        let ciphertext = unpack_bits(&bytes);
        if ciphertext.len() != j.plaintext_len + j.pad_len || !ciphertext.len().is_multiple_of(BLOCK_BITS) {
            return Err(Error::InvalidArgument(
                "trace lengths are inconsistent with the ciphertext".into(),
            ));
        }
        Ok(EncryptionTrace {
            plaintext_len: j.plaintext_len,
            pad_len: j.pad_len,
            ciphertext,
        })
    }
}

/// Pads with random bits and encrypts every block under a single AES-128
/// key drawn from `rng` (the first 16 bytes it yields).
pub fn encrypt<R: RngCore + ?Sized>(plaintext: &[bool], rng: &mut R) -> Result<EncryptionTrace> {
    let mut key = [0u8; 16];
    rng.fill_bytes(&mut key);
    let mut cipher = Aes128 { key };
    encrypt_with(plaintext, &mut cipher, rng)
}

pub fn encrypt_with<R: RngCore + ?Sized>(
    plaintext: &[bool],
    cipher: &mut dyn BlockCipher,
    rng: &mut R,
) -> Result<EncryptionTrace> {
    if plaintext.is_empty() {
        return Err(Error::InvalidArgument("empty plaintext".into()));
    }
    let total = plaintext.len().div_ceil(BLOCK_BITS) * BLOCK_BITS;
    let pad_len = total - plaintext.len();
    let mut padded = plaintext.to_vec();
    padded.extend((0..pad_len).map(|_| rng.next_u32() & 1 == 1));
    let bytes = pack_bits(&padded);
    let mut out = Vec::with_capacity(bytes.len());
    for chunk in bytes.chunks_exact(16) {
        let block: aes::Block = chunk.try_into().expect("16-byte chunk");
        out.extend_from_slice(&cipher.encrypt_block(&block));
    }
    Ok(EncryptionTrace {
        plaintext_len: plaintext.len(),
        pad_len,
        ciphertext: unpack_bits(&out),
    })
}

/// Reassigns gate kinds from the ciphertext, keeping all connectivity.
pub fn decode(trace: &EncryptionTrace, cs: &CodingScheme, m: &MappedNetlist) -> Result<Netlist> {
    let n = m.netlist();
    let g = n.gates().len();
    if trace.plaintext_len != g || cs.gate_order.len() != g {
        return Err(Error::LengthMismatch {
            what: "gates to decode",
            expected: g,
            actual: trace.plaintext_len,
        });
    }
    if trace.ciphertext.len() < g {
        return Err(Error::LengthMismatch {
            what: "ciphertext bits",
            expected: g,
            actual: trace.ciphertext.len(),
        });
    }
    let mut kinds: Vec<GateKind> = n.gates().iter().map(|g| g.kind).collect();
    for (i, &gi) in cs.gate_order.iter().enumerate() {
        kinds[gi] = cs.kind(trace.ciphertext[i]);
    }
    n.with_gate_kinds(&kinds)
}

pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)))
        })
        .collect()
}

pub fn unpack_bits(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).map(move |i| b >> (7 - i) & 1 == 1))
        .collect()
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn from_hex(s: &str) -> Result<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("odd-length hex string `{s}`")));
    }
    (0..s.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&s[i..i + 2], 16)
                .map_err(|_| Error::InvalidArgument(format!("bad hex digits in `{s}`")))
        })
        .collect()
}

/// Parses a string of `0`/`1` characters.
pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::InvalidArgument(format!("`{c}` is not a bit"))),
        })
        .collect()
}

pub fn format_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}
