//! Binary frames exchanged between user and servers.
//!
//! Frame: `"PLT1"`, one type byte, `u32` payload length, payload. All
//! integers are little-endian; field elements travel as `u64`.

use std::io::{Read, Write};

use crate::engine::{Database, QueryBundle};
use crate::error::{PltError, Result};
use crate::field::{Fe, PrimeField};
use crate::pc::{Expression, Term};

pub const MAGIC: &[u8; 4] = b"PLT1";
pub const HEADER_LEN: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum MsgType {
    Query = 1,
    Answer = 2,
    Error = 3,
    LoadDb = 4,
}

impl MsgType {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(MsgType::Query),
            2 => Some(MsgType::Answer),
            3 => Some(MsgType::Error),
            4 => Some(MsgType::LoadDb),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: MsgType,
    pub payload: Vec<u8>,
}

/// Error-frame codes.
pub mod codes {
    pub const MALFORMED: u32 = 1;
    pub const DIMENSION_MISMATCH: u32 = 2;
    pub const BAD_INDEX: u32 = 3;
    pub const NO_DATABASE: u32 = 4;
    pub const UNEXPECTED: u32 = 5;
    pub const INTERNAL: u32 = 255;
}

pub fn error_code(e: &PltError) -> u32 {
    match e {
        PltError::Malformed(_) | PltError::Overflow(_) => codes::MALFORMED,
        PltError::DimensionMismatch(_) => codes::DIMENSION_MISMATCH,
        PltError::BadIndex(_) => codes::BAD_INDEX,
        _ => codes::INTERNAL,
    }
}

fn len_u32(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| PltError::Overflow(n))
}

pub fn encode_frame(msg_type: MsgType, payload: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.push(msg_type as u8);
    out.extend_from_slice(&len_u32(payload.len())?.to_le_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

/// Parses a frame header, returning the type and payload length.
pub fn parse_header(h: &[u8; HEADER_LEN]) -> Result<(MsgType, usize)> {
    if &h[..4] != MAGIC {
        return Err(PltError::Malformed(format!("bad magic {:02x?}", &h[..4])));
    }
    let t = MsgType::from_byte(h[4]).ok_or_else(|| PltError::Malformed(format!("unknown message type {:#04x}", h[4])))?;
    Ok((t, u32::from_le_bytes(h[5..9].try_into().unwrap()) as usize))
}

/// Parses exactly one frame occupying all of `bytes`.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame> {
    let header: &[u8; HEADER_LEN] = bytes
        .get(..HEADER_LEN)
        .and_then(|h| h.try_into().ok())
        .ok_or_else(|| PltError::Malformed(format!("{} bytes is shorter than a frame header", bytes.len())))?;
    let (msg_type, len) = parse_header(header)?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != len {
        return Err(PltError::Malformed(format!("header announces {len} payload bytes, found {}", payload.len())));
    }
    Ok(Frame { msg_type, payload: payload.to_vec() })
}

fn expect_type(f: &Frame, t: MsgType) -> Result<()> {
    if f.msg_type != t {
        return Err(PltError::Malformed(format!("expected a {t:?} frame, got {:?}", f.msg_type)));
    }
    Ok(())
}

/// Upper bound on payloads accepted from a socket.
pub const MAX_PAYLOAD: usize = 1 << 30;

/// Reads one frame; `Ok(None)` on a clean end of stream. A payload with a bad
/// header is still consumed so the stream stays aligned, then reported.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Frame>> {
    let mut h = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        let n = r.read(&mut h[got..])?;
        if n == 0 {
            return if got == 0 {
                Ok(None)
            } else {
                Err(PltError::Malformed("stream ended inside a frame header".into()))
            };
        }
        got += n;
    }
    let len = u32::from_le_bytes(h[5..9].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD {
        return Err(PltError::Malformed(format!("payload of {len} bytes exceeds the limit")));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    let (msg_type, _) = parse_header(&h)?;
    Ok(Some(Frame { msg_type, payload }))
}

pub fn write_frame<W: Write>(w: &mut W, bytes: &[u8]) -> Result<()> {
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Cursor { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            PltError::Malformed(format!("payload truncated at byte {} (needed {n} more)", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn elem(&mut self, f: &PrimeField) -> Result<Fe> {
        f.try_elem(self.u64()?)
    }

    fn elems(&mut self, f: &PrimeField, n: usize) -> Result<Vec<Fe>> {
        // reject absurd counts before allocating
        if n.saturating_mul(8) > self.buf.len() - self.pos {
            return Err(PltError::Malformed(format!("{n} elements announced, payload too short")));
        }
        (0..n).map(|_| self.elem(f)).collect()
    }

    fn field(&mut self) -> Result<PrimeField> {
        let q = self.u64()?;
        PrimeField::new(q).map_err(|e| PltError::Malformed(format!("modulus {q}: {e}")))
    }

    fn rest(&mut self) -> &'a [u8] {
        let s = &self.buf[self.pos..];
        self.pos = self.buf.len();
        s
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(PltError::Malformed(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_count(out: &mut Vec<u8>, n: usize) -> Result<()> {
    put_u32(out, len_u32(n)?);
    Ok(())
}

pub fn query_payload(b: &QueryBundle) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    put_u64(&mut out, b.field.modulus());
    for n in [b.k, b.s, b.r(), b.f()] {
        put_count(&mut out, n)?;
    }
    for row in b.q_vectors.iter().chain(&b.betas) {
        for x in row {
            put_u64(&mut out, x.value());
        }
    }
    put_count(&mut out, b.expressions.len())?;
    for e in &b.expressions {
        put_count(&mut out, e.terms.len())?;
        for t in &e.terms {
            put_u32(&mut out, t.func);
            put_u32(&mut out, t.symbol);
            put_u64(&mut out, t.coeff.value());
        }
    }
    Ok(out)
}

pub fn encode_query(b: &QueryBundle) -> Result<Vec<u8>> {
    encode_frame(MsgType::Query, &query_payload(b)?)
}

pub fn parse_query_payload(p: &[u8]) -> Result<QueryBundle> {
    let mut c = Cursor::new(p);
    let field = c.field()?;
    let (k, s, r, f) = (c.usize()?, c.usize()?, c.usize()?, c.usize()?);
    let q_vectors = (0..r).map(|_| c.elems(&field, k)).collect::<Result<Vec<_>>>()?;
    let betas = (0..f).map(|_| c.elems(&field, r)).collect::<Result<Vec<_>>>()?;
    let count = c.usize()?;
    let mut expressions = Vec::with_capacity(count.min(p.len() / 4));
    for _ in 0..count {
        let nterms = c.usize()?;
        let mut terms = Vec::with_capacity(nterms.min(p.len() / 16));
        for _ in 0..nterms {
            let (func, symbol) = (c.u32()?, c.u32()?);
            if func as usize >= f || symbol as usize >= s {
                return Err(PltError::Malformed(format!("term (f={func}, s={symbol}) outside F={f}, S={s}")));
            }
            terms.push(Term { func, symbol, coeff: c.elem(&field)? });
        }
        expressions.push(Expression { terms });
    }
    c.finish()?;
    Ok(QueryBundle { field, k, s, q_vectors, betas, expressions })
}

pub fn decode_query(bytes: &[u8]) -> Result<QueryBundle> {
    let f = decode_frame(bytes)?;
    expect_type(&f, MsgType::Query)?;
    parse_query_payload(&f.payload)
}

pub fn encode_answer(symbols: &[Fe]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(4 + 8 * symbols.len());
    put_count(&mut out, symbols.len())?;
    for x in symbols {
        put_u64(&mut out, x.value());
    }
    encode_frame(MsgType::Answer, &out)
}

pub fn parse_answer_payload(p: &[u8], field: &PrimeField) -> Result<Vec<Fe>> {
    let mut c = Cursor::new(p);
    let n = c.usize()?;
    let v = c.elems(field, n)?;
    c.finish()?;
    Ok(v)
}

pub fn decode_answer(bytes: &[u8], field: &PrimeField) -> Result<Vec<Fe>> {
    let f = decode_frame(bytes)?;
    expect_type(&f, MsgType::Answer)?;
    parse_answer_payload(&f.payload, field)
}

pub fn encode_error(code: u32, message: &str) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(4 + message.len());
    put_u32(&mut out, code);
    out.extend_from_slice(message.as_bytes());
    encode_frame(MsgType::Error, &out)
}

/// `(code, message)`; invalid UTF-8 is replaced, not rejected.
pub fn parse_error_payload(p: &[u8]) -> Result<(u32, String)> {
    let mut c = Cursor::new(p);
    let code = c.u32()?;
    Ok((code, String::from_utf8_lossy(c.rest()).into_owned()))
}

/// LoadDb payload, also the on-disk database format.
pub fn db_payload(db: &Database) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 8 * db.k() * db.s());
    put_u64(&mut out, db.field().modulus());
    put_count(&mut out, db.k())?;
    put_count(&mut out, db.s())?;
    for x in db.messages().iter().flatten() {
        put_u64(&mut out, x.value());
    }
    Ok(out)
}

pub fn parse_db_payload(p: &[u8]) -> Result<Database> {
    let mut c = Cursor::new(p);
    let field = c.field()?;
    let (k, s) = (c.usize()?, c.usize()?);
    let symbols = (0..k).map(|_| c.elems(&field, s)).collect::<Result<Vec<_>>>()?;
    c.finish()?;
    Database::new(field, symbols)
}

pub fn encode_load_db(db: &Database) -> Result<Vec<u8>> {
    encode_frame(MsgType::LoadDb, &db_payload(db)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{prepare_run, RunOptions};
    use crate::grs::Demand;
    use crate::rng;
    use rand::Rng;

    fn gf(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn random_bundle(r: &mut impl Rng) -> QueryBundle {
        let q = [2u64, 3, 5, 7, 11, 13, 2_147_483_647][r.random_range(0..7)];
        let field = gf(q);
        let (k, s, rr, f) = (r.random_range(1..6), r.random_range(1..20), r.random_range(1..4), r.random_range(1..6));
        let el = |r: &mut dyn rand::RngCore| field.elem(r.next_u64() % q);
        let q_vectors = (0..rr).map(|_| (0..k).map(|_| el(r)).collect()).collect();
        let betas = (0..f).map(|_| (0..rr).map(|_| el(r)).collect()).collect();
        let expressions = (0..r.random_range(0..6))
            .map(|_| Expression {
                terms: (0..r.random_range(0..4))
                    .map(|_| Term { func: r.random_range(0..f) as u32, symbol: r.random_range(0..s) as u32, coeff: el(r) })
                    .collect(),
            })
            .collect();
        QueryBundle { field, k, s, q_vectors, betas, expressions }
    }

    #[test]
    fn query_round_trip() {
        let mut r = rng::stream(99, 0);
        for _ in 0..200 {
            let b = random_bundle(&mut r);
            assert_eq!(decode_query(&encode_query(&b).unwrap()).unwrap(), b);
        }
    }

    #[test]
    fn empty_expression_list() {
        let f = gf(5);
        let b = QueryBundle { field: f, k: 1, s: 1, q_vectors: vec![vec![f.one()]], betas: vec![vec![f.one()]], expressions: vec![] };
        let bytes = encode_query(&b).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], &[0, 0, 0, 0]);
        assert_eq!(decode_query(&bytes).unwrap(), b);
    }

    #[test]
    fn header_layout() {
        let bytes = encode_answer(&[Fe::ZERO, gf(5).elem(3)]).unwrap();
        assert_eq!(&bytes[..9], &[b'P', b'L', b'T', b'1', 2, 20, 0, 0, 0]);
        assert_eq!(&bytes[9..13], &[2, 0, 0, 0]);
        assert_eq!(&bytes[21..29], &[3, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn example1_prefix() {
        let f = gf(5);
        let d = Demand::new(&f, 4, &[0, 1, 2], &[f.elem(2), f.one(), f.one()]).unwrap();
        let mut opts = RunOptions::default();
        opts.overrides.omegas = Some((0..4).map(|x| f.elem(x)).collect());
        opts.overrides.alphas.insert(3, f.elem(2));
        let prep = prepare_run(&f, 4, 2, &d, 1, &opts).unwrap();
        let bytes = encode_query(&prep.bundles[0]).unwrap();
        let p = &bytes[HEADER_LEN..];
        let words32: Vec<u32> = (0..4).map(|i| u32::from_le_bytes(p[8 + 4 * i..12 + 4 * i].try_into().unwrap())).collect();
        assert_eq!(u64::from_le_bytes(p[..8].try_into().unwrap()), 5);
        assert_eq!(words32, vec![4, 16, 2, 4]);
        let q: Vec<u64> = (0..8).map(|i| u64::from_le_bytes(p[24 + 8 * i..32 + 8 * i].try_into().unwrap())).collect();
        assert_eq!(q, vec![1, 2, 4, 2, 0, 2, 3, 1]);
    }

    #[test]
    fn malformed_inputs() {
        let f = gf(5);
        let b = QueryBundle { field: f, k: 1, s: 2, q_vectors: vec![vec![f.one()]], betas: vec![vec![f.one()]], expressions: vec![Expression { terms: vec![Term { func: 0, symbol: 1, coeff: f.one() }] }] };
        let good = encode_query(&b).unwrap();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_query(&bad), Err(PltError::Malformed(_))));
        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(decode_query(&bad), Err(PltError::Malformed(_))));
        // first Q entry is at payload offset 24; set it to q
        let mut bad = good.clone();
        bad[HEADER_LEN + 24] = 5;
        assert!(matches!(decode_query(&bad), Err(PltError::Malformed(_))));
        let mut bad = good.clone();
        bad.truncate(bad.len() - 3);
        assert!(matches!(decode_query(&bad), Err(PltError::Malformed(_))));
        // symbol index 1 -> 2 (out of S = 2)
        let mut bad = good.clone();
        let at = bad.len() - 12;
        bad[at] = 2;
        assert!(matches!(decode_query(&bad), Err(PltError::Malformed(_))));
        let mut bad = good.clone();
        bad[HEADER_LEN] = 4; // modulus 4 is not prime
        assert!(matches!(decode_query(&bad), Err(PltError::Malformed(_))));
        assert!(matches!(decode_query(&encode_answer(&[]).unwrap()), Err(PltError::Malformed(_))));
        assert!(decode_frame(&[1, 2, 3]).is_err());
    }

    #[test]
    fn answer_error_and_db_round_trip() {
        let f = gf(13);
        let v: Vec<Fe> = (0..13).map(|x| f.elem(x)).collect();
        assert_eq!(decode_answer(&encode_answer(&v).unwrap(), &f).unwrap(), v);
        assert!(decode_answer(&encode_answer(&v).unwrap(), &gf(5)).is_err());
        let e = decode_frame(&encode_error(7, "nope ü").unwrap()).unwrap();
        assert_eq!(e.msg_type, MsgType::Error);
        assert_eq!(parse_error_payload(&e.payload).unwrap(), (7, "nope ü".to_string()));
        let db = Database::random(f, 3, 9, 4);
        let fr = decode_frame(&encode_load_db(&db).unwrap()).unwrap();
        assert_eq!(fr.msg_type, MsgType::LoadDb);
        assert_eq!(parse_db_payload(&fr.payload).unwrap(), db);
    }

    #[test]
    fn stream_reading() {
        let mut buf = encode_answer(&[Fe::ONE]).unwrap();
        buf.extend(encode_error(1, "x").unwrap());
        let mut r = std::io::Cursor::new(buf);
        assert_eq!(read_frame(&mut r).unwrap().unwrap().msg_type, MsgType::Answer);
        assert_eq!(read_frame(&mut r).unwrap().unwrap().msg_type, MsgType::Error);
        assert!(read_frame(&mut r).unwrap().is_none());
        let mut bad = encode_answer(&[Fe::ONE]).unwrap();
        bad[0] = 0;
        bad.extend(encode_answer(&[]).unwrap());
        let mut r = std::io::Cursor::new(bad);
        assert!(read_frame(&mut r).is_err());
        // the bad frame was consumed whole
        assert_eq!(read_frame(&mut r).unwrap().unwrap().msg_type, MsgType::Answer);
    }
}
