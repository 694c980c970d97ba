//! On-disk formats.
//!
//! * fastText-style `.vec` text: a `"<count> <dim>"` header, then one
//!   `"<word> <v1> ... <vd>"` line per word.
//! * `LXRW1` binary containers. An embedding cache is the magic, then
//!   little-endian `u32` count and dim, `count * dim` raw `f32` values in row
//!   order, then every word as a `u32` byte length followed by its UTF-8
//!   bytes. A linear map is the magic, one kind byte, `u32` source and
//!   destination dims, and the row-major `f32` matrix.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::align::{LinearMap, MapKind};
use crate::error::{Error, Result};
use crate::space::{EmbeddingSpace, Vocabulary};

pub const MAGIC: &[u8; 5] = b"LXRW1";

const KIND_GENERAL: u8 = b'G';
const KIND_ORTHONORMAL: u8 = b'O';
const KIND_ORTHONORMAL_DEGENERATE: u8 = b'D';

/// Rows dropped while reading a `.vec` file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    /// Rows whose word contains a space character.
    pub skipped_spaced: usize,
    /// Repeated words; the first occurrence is kept.
    pub skipped_duplicates: usize,
}

impl LoadStats {
    pub fn skipped(&self) -> usize {
        self.skipped_spaced + self.skipped_duplicates
    }
}

/// Reads at most `max_words` rows (all rows when `None`) from a `.vec` file,
/// in file order.
pub fn load_text_embeddings(
    path: impl AsRef<Path>,
    max_words: Option<usize>,
) -> Result<(EmbeddingSpace, LoadStats)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_text_embeddings(BufReader::new(file), path, max_words)
}

pub(crate) fn read_text_embeddings<R: BufRead>(
    reader: R,
    path: &Path,
    max_words: Option<usize>,
) -> Result<(EmbeddingSpace, LoadStats)> {
    let format_err = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(format_err(1, "missing header".into())),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (count, dim) = match fields.as_slice() {
        [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
            (Ok(c), Ok(d)) if d > 0 => (c, d),
            _ => return Err(format_err(1, format!("malformed header {header:?}"))),
        },
        _ => return Err(format_err(1, format!("malformed header {header:?}, expected \"<count> <dim>\""))),
    };
    let limit = max_words.map_or(count, |m| m.min(count));

    let mut vocab = Vocabulary::new();
    let mut data = Vec::with_capacity(limit.min(1 << 20) * dim);
    let mut stats = LoadStats::default();

    for (offset, line) in lines.enumerate().take(count) {
        if vocab.len() >= limit {
            break;
        }
        let line_no = offset + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        let tokens: Vec<&str> = line
            .trim_end_matches(['\r', '\n'])
            .split(' ')
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.is_empty() {
            return Err(format_err(line_no, "empty row".into()));
        }
        let values = tokens.len() - 1;
        if values != dim {
            // Extra leading tokens that are not numbers mean the word itself
            // contains spaces; anything else is a genuine dimension error.
            let spaced = values > dim && tokens[1].parse::<f32>().is_err();
            if spaced {
                stats.skipped_spaced += 1;
                continue;
            }
            return Err(format_err(
                line_no,
                format!("{values} values, expected {dim}"),
            ));
        }
        let word = tokens[0];
        if vocab.contains(word) {
            stats.skipped_duplicates += 1;
            continue;
        }
        for tok in &tokens[1..] {
            let x: f32 = tok
                .parse()
                .map_err(|_| format_err(line_no, format!("invalid number {tok:?}")))?;
            data.push(x);
        }
        vocab.insert(word.to_string());
    }
    if stats.skipped() > 0 {
        log::warn!(
            "{}: skipped {} rows with spaced words and {} duplicates",
            path.display(),
            stats.skipped_spaced,
            stats.skipped_duplicates
        );
    }
    Ok((EmbeddingSpace::new(vocab, data, dim)?, stats))
}

/// Writes a space in `.vec` text format. Values use the shortest
/// representation that reads back to the same `f32`.
pub fn write_text_embeddings(space: &EmbeddingSpace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_text_to(space, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_text_to<W: Write>(space: &EmbeddingSpace, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{} {}", space.len(), space.dim())?;
    for (word, row) in space.vocab().words().iter().zip(space.rows()) {
        write!(w, "{word}")?;
        for x in row {
            write!(w, " {x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_space_binary(space: &EmbeddingSpace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode_space(space, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn encode_space<W: Write>(space: &EmbeddingSpace, w: &mut W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(space.len() as u32).to_le_bytes())?;
    w.write_all(&(space.dim() as u32).to_le_bytes())?;
    for x in space.data() {
        w.write_all(&x.to_le_bytes())?;
    }
    for word in space.vocab().words() {
        w.write_all(&(word.len() as u32).to_le_bytes())?;
        w.write_all(word.as_bytes())?;
    }
    Ok(())
}

pub fn read_space_binary(path: impl AsRef<Path>) -> Result<EmbeddingSpace> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |message: &str| Error::Container {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    let mut cur = Cursor::new(&bytes);
    if cur.take(5) != Some(&MAGIC[..]) {
        return Err(bad("bad magic"));
    }
    let count = cur.u32().ok_or_else(|| bad("truncated header"))? as usize;
    let dim = cur.u32().ok_or_else(|| bad("truncated header"))? as usize;
    let data = cur
        .f32s(count.checked_mul(dim).ok_or_else(|| bad("size overflow"))?)
        .ok_or_else(|| bad("truncated matrix"))?;
    let mut vocab = Vocabulary::new();
    for _ in 0..count {
        let len = cur.u32().ok_or_else(|| bad("truncated word table"))? as usize;
        let raw = cur.take(len).ok_or_else(|| bad("truncated word table"))?;
        let word = std::str::from_utf8(raw).map_err(|_| bad("word is not UTF-8"))?;
        if !vocab.insert(word.to_string()) {
            return Err(bad("duplicate word"));
        }
    }
    if !cur.is_done() {
        return Err(bad("trailing bytes"));
    }
    EmbeddingSpace::with_detected_normalization(vocab, data, dim)
}

/// Loads a space from either an `LXRW1` cache or a `.vec` text file,
/// chosen by the leading magic bytes.
pub fn load_space(path: impl AsRef<Path>) -> Result<EmbeddingSpace> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut head = [0u8; 5];
    let is_binary = matches!(file.read_exact(&mut head), Ok(()) if &head == MAGIC);
    if is_binary {
        read_space_binary(path)
    } else {
        Ok(load_text_embeddings(path, None)?.0)
    }
}

pub fn write_map(map: &LinearMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(14 + map.src_dim() * map.dst_dim() * 4);
    buf.extend_from_slice(MAGIC);
    buf.push(match (map.kind(), map.is_degenerate()) {
        (MapKind::General, _) => KIND_GENERAL,
        (MapKind::OrthonormalRows, false) => KIND_ORTHONORMAL,
        (MapKind::OrthonormalRows, true) => KIND_ORTHONORMAL_DEGENERATE,
    });
    buf.extend_from_slice(&(map.src_dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(map.dst_dim() as u32).to_le_bytes());
    for i in 0..map.src_dim() {
        for j in 0..map.dst_dim() {
            buf.extend_from_slice(&(map.get(i, j) as f32).to_le_bytes());
        }
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_map(path: impl AsRef<Path>) -> Result<LinearMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |message: &str| Error::Container {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    let mut cur = Cursor::new(&bytes);
    if cur.take(5) != Some(&MAGIC[..]) {
        return Err(bad("bad magic"));
    }
    let kind = cur.take(1).ok_or_else(|| bad("truncated header"))?[0];
    let rows = cur.u32().ok_or_else(|| bad("truncated header"))? as usize;
    let cols = cur.u32().ok_or_else(|| bad("truncated header"))? as usize;
    let values = cur
        .f32s(rows.checked_mul(cols).ok_or_else(|| bad("size overflow"))?)
        .ok_or_else(|| bad("truncated matrix"))?;
    if !cur.is_done() {
        return Err(bad("trailing bytes"));
    }
    let matrix = nalgebra::DMatrix::from_row_iterator(rows, cols, values.into_iter().map(f64::from));
    match kind {
        KIND_GENERAL => Ok(LinearMap::general(matrix)),
        KIND_ORTHONORMAL => Ok(LinearMap::orthonormal(matrix, false)),
        KIND_ORTHONORMAL_DEGENERATE => Ok(LinearMap::orthonormal(matrix, true)),
        _ => Err(bad("unknown map kind")),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Cursor { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Option<Vec<f32>> {
        let raw = self.take(n.checked_mul(4)?)?;
        Some(
            raw.chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect(),
        )
    }

    fn is_done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}
