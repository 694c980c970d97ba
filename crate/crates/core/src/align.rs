//! Closed-form orthogonal Procrustes alignment and view interpolation.
//!
//! Vectors are rows; a map `W` of shape `d1 x d2` sends a `d1` row `x` to
//! `x W`. The rectangular solver returns the row-orthonormal `W` that
//! minimises `||X W - Y||_F`, which is `U V^T` for the thin SVD
//! `X^T Y = U S V^T`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lexicon::{decouple_pairs, Side, TranslationLexicon};
use crate::space::{unit, EmbeddingSpace};

/// Relative singular-value threshold below which `X^T Y` counts as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    /// `M M^T = I`.
    OrthonormalRows,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    kind: MapKind,
    degenerate: bool,
}

impl LinearMap {
    pub fn general(matrix: DMatrix<f64>) -> Self {
        LinearMap {
            matrix,
            kind: MapKind::General,
            degenerate: false,
        }
    }

    pub fn orthonormal(matrix: DMatrix<f64>, degenerate: bool) -> Self {
        LinearMap {
            matrix,
            kind: MapKind::OrthonormalRows,
            degenerate,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::orthonormal(DMatrix::identity(dim, dim), false)
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    /// True when the solver input was rank deficient and the minimiser is not unique.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn src_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dst_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[(row, col)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `x W` for a row vector `x`, accumulated in `f64` in a fixed order.
    pub fn apply(&self, x: &[f32]) -> Vec<f64> {
        assert_eq!(x.len(), self.src_dim(), "map input dimension");
        let mut out = vec![0.0; self.dst_dim()];
        for (i, &xi) in x.iter().enumerate() {
            let xi = xi as f64;
            if xi == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += xi * self.matrix[(i, j)];
            }
        }
        out
    }

    /// Largest elementwise deviation of `M M^T` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = &self.matrix * self.matrix.transpose();
        let eye = DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
        (gram - eye).amax()
    }
}

/// Solves `min ||X W - Y||_F` over row-orthonormal `W` (`d1 <= d2`).
pub fn solve_procrustes(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<LinearMap> {
    if x.nrows() == 0 {
        return Err(Error::Empty("Procrustes input"));
    }
    if x.nrows() != y.nrows() {
        return Err(Error::Invalid(format!(
            "Procrustes inputs have {} and {} rows",
            x.nrows(),
            y.nrows()
        )));
    }
    let (d1, d2) = (x.ncols(), y.ncols());
    if d1 > d2 {
        return Err(Error::Invalid(format!(
            "row-orthonormal map needs d1 <= d2, got {d1} x {d2}"
        )));
    }
    let cross = x.transpose() * y;
    let svd = cross.svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let largest = svd.singular_values.max();
    let smallest = svd.singular_values.min();
    let degenerate = largest == 0.0 || smallest <= RANK_TOLERANCE * largest;
    if degenerate {
        log::warn!("Procrustes input is rank deficient; the returned map is one of several minimisers");
    }
    Ok(LinearMap::orthonormal(u * v_t, degenerate))
}

fn unit_rows<'a>(rows: impl Iterator<Item = &'a [f32]>, dim: usize) -> Result<DMatrix<f64>> {
    let mut flat = Vec::new();
    let mut n = 0;
    for row in rows {
        let r: Vec<f64> = row.iter().map(|&v| v as f64).collect();
        flat.extend(unit(&r).ok_or(Error::ZeroInput)?);
        n += 1;
    }
    Ok(DMatrix::from_row_slice(n, dim, &flat))
}

/// Applies `map` to every row and renormalises.
pub fn map_space(space: &EmbeddingSpace, map: &LinearMap) -> Result<EmbeddingSpace> {
    if space.dim() != map.src_dim() {
        return Err(Error::Dimension {
            expected: map.src_dim(),
            got: space.dim(),
        });
    }
    space
        .map_rows(map.dst_dim(), |id, row| {
            unit(&map.apply(row)).ok_or_else(|| Error::ZeroVector(space.vocab().word(id).to_string()))
        })?
        .l2_normalize()
}

/// Induces a static cross-lingual space: solves a square orthogonal map on
/// the seed pairs and moves the source space into the target space.
/// Returns `(mapped source, target)`, both normalized.
pub fn induce_clwe(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    train: &TranslationLexicon,
) -> Result<(EmbeddingSpace, EmbeddingSpace, LinearMap)> {
    if src.dim() != tgt.dim() {
        return Err(Error::Dimension {
            expected: src.dim(),
            got: tgt.dim(),
        });
    }
    let pairs: Vec<(usize, usize)> = train
        .iter()
        .filter_map(|(s, t)| Some((src.id(s)?, tgt.id(t)?)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Empty("training lexicon"));
    }
    let x = unit_rows(pairs.iter().map(|&(s, _)| src.row(s)), src.dim())?;
    let y = unit_rows(pairs.iter().map(|&(_, t)| tgt.row(t)), tgt.dim())?;
    let map = solve_procrustes(&x, &y)?;
    let mapped = map_space(src, &map)?;
    let tgt = if tgt.is_normalized() {
        tgt.clone()
    } else {
        tgt.clone().l2_normalize()?
    };
    Ok((mapped, tgt, map))
}

/// Fits the shared map from the static cross-lingual space into the
/// encoder space, using every distinct dictionary word of both languages
/// as an anchor `(static(w), encoder(w))`. Both sides are unit-normalized.
pub fn fit_static_to_encoder(
    static_src: &EmbeddingSpace,
    static_tgt: &EmbeddingSpace,
    enc_src: &EmbeddingSpace,
    enc_tgt: &EmbeddingSpace,
    lex: &TranslationLexicon,
) -> Result<LinearMap> {
    if static_src.dim() != static_tgt.dim() || enc_src.dim() != enc_tgt.dim() {
        return Err(Error::Invalid("both languages must share static and encoder dimensions".into()));
    }
    let (d1, d2) = (static_src.dim(), enc_src.dim());
    let mut xs: Vec<&[f32]> = Vec::new();
    let mut ys: Vec<&[f32]> = Vec::new();
    for anchor in decouple_pairs(lex, static_src, static_tgt) {
        let (st, enc) = match anchor.side {
            Side::Source => (static_src, enc_src),
            Side::Target => (static_tgt, enc_tgt),
        };
        if let (Some(x), Some(y)) = (st.lookup(&anchor.word), enc.lookup(&anchor.word)) {
            xs.push(x);
            ys.push(y);
        }
    }
    if xs.len() < d1 {
        return Err(Error::Underdetermined {
            anchors: xs.len(),
            dim: d1,
        });
    }
    let x = unit_rows(xs.into_iter(), d1)?;
    let y = unit_rows(ys.into_iter(), d2)?;
    solve_procrustes(&x, &y)
}

/// Mixing weight between the mapped static view (0) and the encoder view (1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationConfig {
    lambda: f64,
}

impl InterpolationConfig {
    pub const BLI_DEFAULT: f64 = 0.3;
    pub const XLSIM_DEFAULT: f64 = 0.5;

    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Invalid(format!("lambda {lambda} outside [0, 1]")));
        }
        Ok(InterpolationConfig { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

fn check_dims(static_len: usize, enc_len: usize, map: &LinearMap) -> Result<()> {
    if enc_len != map.dst_dim() {
        return Err(Error::Dimension {
            expected: map.dst_dim(),
            got: enc_len,
        });
    }
    if static_len != map.src_dim() {
        return Err(Error::Dimension {
            expected: map.src_dim(),
            got: static_len,
        });
    }
    Ok(())
}

fn blend(static_vec: &[f32], enc_unit: &[f64], map: &LinearMap, lambda: f64) -> Result<Vec<f64>> {
    let mapped = unit(&map.apply(static_vec)).ok_or(Error::ZeroInput)?;
    Ok(mapped
        .iter()
        .zip(enc_unit)
        .map(|(s, e)| (1.0 - lambda) * s + lambda * e)
        .collect())
}

/// `(1 - lambda) unit(static W) + lambda unit(enc)`. The sum is not renormalised.
pub fn interpolate(
    static_vec: &[f32],
    enc_vec: &[f32],
    map: &LinearMap,
    cfg: InterpolationConfig,
) -> Result<Vec<f64>> {
    check_dims(static_vec.len(), enc_vec.len(), map)?;
    let enc: Vec<f64> = enc_vec.iter().map(|&v| v as f64).collect();
    let enc = unit(&enc).ok_or(Error::ZeroInput)?;
    blend(static_vec, &enc, map, cfg.lambda)
}

/// Row-wise [`interpolate`] over two spaces with identical vocabularies.
/// Rows of an already normalized encoder space are used as stored, so
/// `lambda = 1` reproduces that space exactly.
pub fn interpolate_space(
    static_space: &EmbeddingSpace,
    encoder_space: &EmbeddingSpace,
    map: &LinearMap,
    cfg: InterpolationConfig,
) -> Result<EmbeddingSpace> {
    let (a, b) = (static_space.vocab().words(), encoder_space.vocab().words());
    if let Some(row) = (0..a.len().max(b.len())).find(|&i| a.get(i) != b.get(i)) {
        return Err(Error::VocabMismatch {
            row,
            left: a.get(row).cloned().unwrap_or_default(),
            right: b.get(row).cloned().unwrap_or_default(),
        });
    }
    check_dims(static_space.dim(), encoder_space.dim(), map)?;
    let zero = |id: usize| Error::ZeroVector(static_space.vocab().word(id).to_string());
    static_space.map_rows(map.dst_dim(), |id, row| {
        let enc: Vec<f64> = encoder_space.row(id).iter().map(|&v| v as f64).collect();
        let enc = if encoder_space.is_normalized() {
            enc
        } else {
            unit(&enc).ok_or_else(|| zero(id))?
        };
        blend(row, &enc, map, cfg.lambda).map_err(|_| zero(id))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::LexiconRole;
    use approx::assert_abs_diff_eq;

    fn rows(n: usize, d: usize, vals: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, d, vals)
    }

    #[test]
    fn recovers_quarter_turn() {
        let x = rows(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let y = rows(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let w = solve_procrustes(&x, &y).unwrap();
        assert_abs_diff_eq!(w.matrix(), &rows(2, 2, &[0.0, 1.0, -1.0, 0.0]), epsilon = 1e-12);
        assert!(!w.is_degenerate());
    }

    #[test]
    fn embeds_identity_into_wider_space() {
        let x = rows(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let y = rows(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let w = solve_procrustes(&x, &y).unwrap();
        assert_abs_diff_eq!(w.matrix(), &y, epsilon = 1e-12);
        assert!(w.orthonormality_error() < 1e-12);
    }

    #[test]
    fn rank_deficient_input_is_flagged() {
        let x = rows(1, 2, &[1.0, 0.0]);
        let y = rows(1, 2, &[0.0, 1.0]);
        let w = solve_procrustes(&x, &y).unwrap();
        assert!(w.is_degenerate());
        assert!(w.orthonormality_error() < 1e-12);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(solve_procrustes(&DMatrix::zeros(0, 2), &DMatrix::zeros(0, 2)).is_err());
        assert!(solve_procrustes(&DMatrix::zeros(2, 3), &DMatrix::zeros(2, 2)).is_err());
        assert!(solve_procrustes(&DMatrix::zeros(2, 2), &DMatrix::zeros(3, 2)).is_err());
    }

    fn plane() -> EmbeddingSpace {
        EmbeddingSpace::from_rows(vec![
            ("a", vec![1.0, 0.0]),
            ("b", vec![0.0, 1.0]),
            ("c", vec![0.6, 0.8]),
        ])
        .unwrap()
        .l2_normalize()
        .unwrap()
    }

    #[test]
    fn induce_on_identical_spaces_is_identity() {
        let s = plane();
        let lex = TranslationLexicon::new([("a", "a"), ("b", "b"), ("c", "c")], LexiconRole::Train);
        let (mapped, _, w) = induce_clwe(&s, &s, &lex).unwrap();
        assert_abs_diff_eq!(w.matrix(), &DMatrix::identity(2, 2), epsilon = 1e-6);
        for (a, b) in mapped.data().iter().zip(s.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn induce_rejects_empty_lexicon() {
        let s = plane();
        let lex = TranslationLexicon::new(Vec::<(String, String)>::new(), LexiconRole::Train);
        assert!(matches!(induce_clwe(&s, &s, &lex), Err(Error::Empty(_))));
    }

    #[test]
    fn underdetermined_fit() {
        let s = plane();
        let lex = TranslationLexicon::new([("a", "a")], LexiconRole::Train);
        // One distinct word per side -> 2 anchors, enough for d1 = 2.
        assert!(fit_static_to_encoder(&s, &s, &s, &s, &lex).is_ok());
        let tgt = EmbeddingSpace::from_rows(vec![("z", vec![1.0f32, 0.0])]).unwrap();
        let lex = TranslationLexicon::new([("a", "q")], LexiconRole::Train);
        assert!(matches!(
            fit_static_to_encoder(&s, &tgt, &s, &tgt, &lex),
            Err(Error::Underdetermined { anchors: 1, dim: 2 })
        ));
    }

    #[test]
    fn interpolation_endpoints_and_midpoint() {
        let w = LinearMap::identity(2);
        let s = [1.0f32, 0.0];
        let e = [0.0f32, 2.0];
        let at = |l| interpolate(&s, &e, &w, InterpolationConfig::new(l).unwrap()).unwrap();
        assert_eq!(at(1.0), vec![0.0, 1.0]);
        assert_eq!(at(0.0), vec![1.0, 0.0]);
        let mid = at(0.3);
        assert_abs_diff_eq!(mid[0], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(mid[1], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn interpolation_errors() {
        let w = LinearMap::identity(2);
        let cfg = InterpolationConfig::new(0.5).unwrap();
        assert!(interpolate(&[0.0, 0.0], &[1.0, 0.0], &w, cfg).is_err());
        assert!(interpolate(&[1.0, 0.0], &[0.0, 0.0], &w, cfg).is_err());
        assert!(InterpolationConfig::new(1.5).is_err());
        assert!(InterpolationConfig::new(-0.1).is_err());
    }

    #[test]
    fn interpolate_space_checks_vocab() {
        let a = plane();
        let b = EmbeddingSpace::from_rows(vec![("a", vec![1.0f32, 0.0]), ("x", vec![0.0, 1.0]), ("c", vec![1.0, 1.0])]).unwrap();
        let err = interpolate_space(&a, &b, &LinearMap::identity(2), InterpolationConfig::new(0.5).unwrap()).unwrap_err();
        assert!(matches!(err, Error::VocabMismatch { row: 1, .. }));
    }

    #[test]
    fn interpolate_space_midpoint_matches_rowwise() {
        let st = plane();
        let enc = EmbeddingSpace::from_rows(vec![
            ("a", vec![0.0f32, 3.0]),
            ("b", vec![1.0, 1.0]),
            ("c", vec![-1.0, 0.0]),
        ])
        .unwrap();
        let w = LinearMap::identity(2);
        let cfg = InterpolationConfig::new(0.5).unwrap();
        let out = interpolate_space(&st, &enc, &w, cfg).unwrap();
        assert!(!out.is_normalized());
        for id in 0..3 {
            let s: Vec<f64> = st.row(id).iter().map(|&v| v as f64).collect();
            let e: Vec<f64> = enc.row(id).iter().map(|&v| v as f64).collect();
            let (s, e) = (unit(&s).unwrap(), unit(&e).unwrap());
            for j in 0..2 {
                assert_abs_diff_eq!(out.row(id)[j] as f64, 0.5 * s[j] + 0.5 * e[j], epsilon = 1e-7);
            }
        }
    }
}
