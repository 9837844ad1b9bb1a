//! Rate-1/2, constraint-length-7 convolutional code (133, 171 octal) with a
//! soft-decision Viterbi decoder.

/// Generator polynomials, octal; the most significant of the 7 bits taps the
/// current input.
pub const GENERATORS: [u32; 2] = [0o133, 0o171];
pub const CONSTRAINT_LENGTH: usize = 7;
/// Zero bits appended to return the encoder to state 0.
pub const TAIL_BITS: usize = CONSTRAINT_LENGTH - 1;
pub const CODE_RATE: f64 = 0.5;

const NUM_STATES: usize = 1 << TAIL_BITS;

/// Code parameters. Only the (133, 171) code is supported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeConfig {
    pub generators: [u32; 2],
    pub constraint_length: usize,
    pub rate: f64,
}

impl Default for CodeConfig {
    fn default() -> Self {
        Self {
            generators: GENERATORS,
            constraint_length: CONSTRAINT_LENGTH,
            rate: CODE_RATE,
        }
    }
}

#[inline]
fn outputs(register: u32) -> (u8, u8) {
    (
        ((register & GENERATORS[0]).count_ones() & 1) as u8,
        ((register & GENERATORS[1]).count_ones() & 1) as u8,
    )
}

/// Number of coded bits produced for a message of `message_len` bits.
pub fn coded_len(message_len: usize) -> usize {
    2 * (message_len + TAIL_BITS)
}

/// Encodes `bits` (0/1 values) followed by six zero tail bits. Output is
/// `g1, g2` per input bit.
pub fn conv_encode(bits: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(coded_len(bits.len()));
    let mut state = 0u32;
    for &b in bits.iter().chain(std::iter::repeat_n(&0, TAIL_BITS)) {
        debug_assert!(b <= 1);
        let register = (u32::from(b) << TAIL_BITS) | state;
        let (a, c) = outputs(register);
        out.push(a);
        out.push(c);
        state = register >> 1;
    }
    out
}

/// Maximum-likelihood decoding of a terminated codeword.
///
/// `llrs` holds one log-likelihood ratio per coded bit, positive when the bit
/// is more likely 0. Its length must be `coded_len(message_len)`.
pub fn viterbi_decode(llrs: &[f64], message_len: usize) -> Vec<u8> {
    assert_eq!(
        llrs.len(),
        coded_len(message_len),
        "LLR count does not match a terminated codeword of {message_len} bits"
    );
    let steps = message_len + TAIL_BITS;

    // Branch output of predecessor p taking input u, indexed by the 7-bit register.
    let branch: Vec<(u8, u8)> = (0..(2 * NUM_STATES) as u32).map(outputs).collect();

    const NEG: f64 = f64::NEG_INFINITY;
    let mut metric = [NEG; NUM_STATES];
    metric[0] = 0.0;
    let mut next = [NEG; NUM_STATES];
    let mut decisions = Vec::with_capacity(steps);

    for t in 0..steps {
        let (l0, l1) = (0.5 * llrs[2 * t], 0.5 * llrs[2 * t + 1]);
        // Correlation metric of each output pair (c0, c1).
        let bm = [l0 + l1, l0 - l1, -l0 + l1, -l0 - l1];
        let mut word = 0u64;
        for (ns, slot) in next.iter_mut().enumerate() {
            let input = (ns >> (TAIL_BITS - 1)) as u32;
            let p0 = (ns << 1) & (NUM_STATES - 1);
            let p1 = p0 | 1;
            let r0 = (input << TAIL_BITS) | p0 as u32;
            let r1 = (input << TAIL_BITS) | p1 as u32;
            let (a0, b0) = branch[r0 as usize];
            let (a1, b1) = branch[r1 as usize];
            let m0 = metric[p0] + bm[usize::from(a0 << 1 | b0)];
            let m1 = metric[p1] + bm[usize::from(a1 << 1 | b1)];
            if m1 > m0 {
                *slot = m1;
                word |= 1 << ns;
            } else {
                *slot = m0;
            }
        }
        decisions.push(word);
        // Renormalize against the best metric to keep values bounded.
        let best = next.iter().copied().fold(NEG, f64::max);
        for (m, n) in metric.iter_mut().zip(&next) {
            *m = n - best;
        }
    }

    let mut bits = vec![0u8; steps];
    let mut state = 0usize;
    for t in (0..steps).rev() {
        bits[t] = (state >> (TAIL_BITS - 1)) as u8;
        let b = ((decisions[t] >> state) & 1) as usize;
        state = ((state << 1) & (NUM_STATES - 1)) | b;
    }
    debug_assert_eq!(state, 0);
    bits.truncate(message_len);
    bits
}
