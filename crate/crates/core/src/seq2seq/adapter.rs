//! Plugging an external sequence model in as a filter process.

use std::io::{self, BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to run model command `{program}`: {source}")]
    Spawn { program: String, source: io::Error },
    #[error("model i/o failed: {0}")]
    Io(#[from] io::Error),
    #[error("model exited with {0}")]
    Failed(std::process::ExitStatus),
    #[error("model produced {got} lines for {expected} inputs")]
    LineCount { expected: usize, got: usize },
}

/// A command reading one input per line on stdin and writing exactly one
/// output line per input on stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalModel {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalModel {
    pub fn new(program: impl Into<String>, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        ExternalModel { program: program.into(), args: args.into_iter().map(Into::into).collect() }
    }

    pub fn predict<S: AsRef<str>>(&self, inputs: &[S]) -> Result<Vec<String>, ModelError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|source| ModelError::Spawn { program: self.program.clone(), source })?;
        let mut stdin = child.stdin.take().expect("piped");
        let payload: String = inputs.iter().map(|l| format!("{}\n", l.as_ref().replace('\n', " "))).collect();
        let writer = std::thread::spawn(move || stdin.write_all(payload.as_bytes()));
        let stdout = child.stdout.take().expect("piped");
        let lines: Vec<String> = BufReader::new(stdout).lines().collect::<Result<_, _>>()?;
        writer.join().expect("writer thread")?;
        let status = child.wait()?;
        if !status.success() {
            return Err(ModelError::Failed(status));
        }
        if lines.len() != inputs.len() {
            return Err(ModelError::LineCount { expected: inputs.len(), got: lines.len() });
        }
        Ok(lines)
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;

    #[test]
    fn cat_echoes_lines() {
        let model = ExternalModel::new("cat", Vec::<String>::new());
        let out = model.predict(&["( x / thing )", "( b / bad )"]).unwrap();
        assert_eq!(out, ["( x / thing )", "( b / bad )"]);
    }

    #[test]
    fn line_count_mismatch() {
        let model = ExternalModel::new("head", ["-n", "1"]);
        assert!(matches!(model.predict(&["a", "b"]), Err(ModelError::LineCount { expected: 2, got: 1 })));
    }

    #[test]
    fn missing_program() {
        let model = ExternalModel::new("/nonexistent/model", Vec::<String>::new());
        assert!(matches!(model.predict(&["a"]), Err(ModelError::Spawn { .. })));
    }
}
