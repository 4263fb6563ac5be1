//! Plain-text vector files: a `«vocab_size» «dim»` header line followed by
//! one `«code» «f1» … «fdim»` line per code. Input vectors live at the given
//! path, output vectors in a sibling file with an `.out` suffix.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{EmbeddingError, EmbeddingModel};
use crate::codes::CodeId;

pub fn output_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".out");
    PathBuf::from(os)
}

impl EmbeddingModel {
    /// Writes the input vectors. Floats use the shortest representation
    /// that parses back to the same value.
    pub fn write_text<W: Write>(&self, sink: W) -> std::io::Result<()> {
        write_matrix(sink, self.vocab(), self.dim(), self.input_matrix())
    }

    pub fn write_output_text<W: Write>(&self, sink: W) -> std::io::Result<()> {
        write_matrix(sink, self.vocab(), self.dim(), self.output_matrix())
    }

    /// Reads a model from input vectors alone; output vectors are zeroed.
    pub fn read_text<R: BufRead>(source: R) -> Result<Self, EmbeddingError> {
        let (dim, vocab, input) = read_matrix(source, "<input>")?;
        let n = vocab.len();
        EmbeddingModel::from_parts(dim, vocab, vec![0; n], input, vec![0.0; n * dim])
    }
}

fn write_matrix<W: Write>(sink: W, vocab: &[CodeId], dim: usize, matrix: &[f64]) -> std::io::Result<()> {
    let mut w = BufWriter::new(sink);
    writeln!(w, "{} {}", vocab.len(), dim)?;
    for (code, row) in vocab.iter().zip(matrix.chunks(dim)) {
        write!(w, "{code}")?;
        for x in row {
            write!(w, " {x}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

fn read_matrix<R: BufRead>(source: R, path: &str) -> Result<(usize, Vec<CodeId>, Vec<f64>), EmbeddingError> {
    let err = |line: usize, message: String| EmbeddingError::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut lines = source.lines();
    let header = lines.next().ok_or_else(|| err(1, "missing header".into()))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (n, dim) = match fields.as_slice() {
        [n, d] => (
            n.parse::<usize>().map_err(|e| err(1, format!("bad vocab size: {e}")))?,
            d.parse::<usize>().map_err(|e| err(1, format!("bad dimension: {e}")))?,
        ),
        _ => return Err(err(1, format!("expected `«vocab_size» «dim»`, found {header:?}"))),
    };
    if dim == 0 {
        return Err(err(1, "dimension must be positive".into()));
    }

    let mut vocab = Vec::with_capacity(n);
    let mut matrix = Vec::with_capacity(n * dim);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let code = parts.next().expect("non-empty line has a token");
        let code = CodeId::new(code).map_err(|e| err(line_no, e.to_string()))?;
        let before = matrix.len();
        for tok in parts {
            let x = tok
                .parse::<f64>()
                .map_err(|e| err(line_no, format!("bad float {tok:?}: {e}")))?;
            matrix.push(x);
        }
        let found = matrix.len() - before;
        if found != dim {
            return Err(err(line_no, format!("expected {dim} values for {code}, found {found}")));
        }
        vocab.push(code);
    }
    if vocab.len() != n {
        return Err(err(
            1,
            format!("header declares {n} codes but file has {}", vocab.len()),
        ));
    }
    Ok((dim, vocab, matrix))
}

/// Writes input vectors to `path` and output vectors to `path.out`.
pub fn save_model(model: &EmbeddingModel, path: &Path) -> Result<(), EmbeddingError> {
    model.write_text(File::create(path)?)?;
    model.write_output_text(File::create(output_path(path))?)?;
    Ok(())
}

/// Loads `path`, plus `path.out` when present (otherwise output vectors are
/// zero). Both files must list the same codes in the same order.
pub fn load_model(path: &Path) -> Result<EmbeddingModel, EmbeddingError> {
    let name = path.display().to_string();
    let (dim, vocab, input) = read_matrix(BufReader::new(File::open(path)?), &name)?;
    let out_path = output_path(path);
    let output = if out_path.exists() {
        let out_name = out_path.display().to_string();
        let (out_dim, out_vocab, output) = read_matrix(BufReader::new(File::open(&out_path)?), &out_name)?;
        if out_dim != dim || out_vocab != vocab {
            return Err(EmbeddingError::Parse {
                path: out_name,
                line: 1,
                message: "output vectors do not match the input vocabulary".into(),
            });
        }
        output
    } else {
        vec![0.0; vocab.len() * dim]
    };
    let n = vocab.len();
    EmbeddingModel::from_parts(dim, vocab, vec![0; n], input, output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn short_row_is_reported_with_its_line() {
        let text = "2 3\nA 1 2 3\nB 1 2\n";
        match EmbeddingModel::read_text(text.as_bytes()) {
            Err(EmbeddingError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_vocabulary_file_loads() {
        let m = EmbeddingModel::read_text("0 100\n".as_bytes()).unwrap();
        assert!(m.is_empty());
        assert_eq!(m.dim(), 100);
    }

    #[test]
    fn header_count_mismatch_is_an_error() {
        assert!(EmbeddingModel::read_text("3 1\nA 1\nB 2\n".as_bytes()).is_err());
    }

    #[test]
    fn saves_and_loads_both_matrices() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        let m = EmbeddingModel::from_parts(
            2,
            crate::codes::codes(["A", "B"]),
            vec![3, 1],
            vec![0.1, -2.5e-7, 1.0 / 3.0, 4.0],
            vec![0.5, 0.25, -0.125, 1e-300],
        )
        .unwrap();
        save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.input_matrix(), m.input_matrix());
        assert_eq!(back.output_matrix(), m.output_matrix());
        assert_eq!(back.vocab(), m.vocab());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_exact(
            rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 5), 0..10)
        ) {
            let m = EmbeddingModel::from_vectors(
                5,
                rows.iter().enumerate().map(|(i, r)| (format!("C{i}"), r.clone())),
            ).unwrap();
            let mut buf = Vec::new();
            m.write_text(&mut buf).unwrap();
            let back = EmbeddingModel::read_text(buf.as_slice()).unwrap();
            prop_assert_eq!(back.input_matrix(), m.input_matrix());
            prop_assert_eq!(back.vocab(), m.vocab());
        }
    }
}
