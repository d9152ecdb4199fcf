//! Out-of-process codec plugins.
//!
//! A plugin is any program that, invoked with a trailing `-c`, reads
//! `n u64 LE, tau f64 LE, values f64 LE × n` on stdin and writes its
//! compressed bytes to stdout; invoked with `-d`, it reads those bytes and
//! writes the same `n, tau, values` layout back.

use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::Mutex;

use crate::binio::{put_f64, put_u64, Reader};
use crate::error::{Error, Result};

#[derive(Debug)]
pub struct ExternalCodec {
    program: String,
    args: Vec<String>,
    // one invocation at a time per registered codec
    lock: Mutex<()>,
}

impl Clone for ExternalCodec {
    fn clone(&self) -> Self {
        Self::new(self.program.clone(), self.args.clone())
    }
}

impl ExternalCodec {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self { program: program.into(), args, lock: Mutex::new(()) }
    }

    /// Splits a command line on whitespace: program followed by arguments.
    pub fn from_command_line(cmd: &str) -> Result<Self> {
        let mut parts = cmd.split_whitespace().map(str::to_owned);
        let program = parts
            .next()
            .ok_or_else(|| Error::InvalidConfig("empty external codec command".into()))?;
        Ok(Self::new(program, parts.collect()))
    }

    fn run(&self, mode: &str, input: Vec<u8>) -> Result<Vec<u8>> {
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .arg(mode)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::SubprocessFailure(format!("spawning {}: {e}", self.program)))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || stdin.write_all(&input));
        let output = child
            .wait_with_output()
            .map_err(|e| Error::SubprocessFailure(format!("waiting on {}: {e}", self.program)))?;
        let write_result = writer.join().map_err(|_| Error::SubprocessFailure("stdin writer panicked".into()))?;
        if !output.status.success() {
            return Err(Error::SubprocessFailure(format!(
                "{} {mode} exited with {}: {}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        write_result.map_err(|e| Error::SubprocessFailure(format!("writing stdin: {e}")))?;
        Ok(output.stdout)
    }

    pub fn compress(&self, values: &[f64], tau: f64) -> Result<Vec<u8>> {
        let mut input = Vec::with_capacity(16 + 8 * values.len());
        put_u64(&mut input, values.len() as u64);
        put_f64(&mut input, tau);
        for &v in values {
            put_f64(&mut input, v);
        }
        self.run("-c", input)
    }

    pub fn decompress(&self, compressed: &[u8], n: usize) -> Result<Vec<f64>> {
        let out = self.run("-d", compressed.to_vec())?;
        let mut r = Reader::new(&out, Error::SubprocessFailure);
        let got = r.u64()?;
        if got != n as u64 {
            return Err(Error::SubprocessFailure(format!("decoder returned {got} values, expected {n}")));
        }
        let _tau = r.f64()?;
        let values = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        r.finish()?;
        Ok(values)
    }
}
