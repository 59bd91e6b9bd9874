//! File-based bridge to an out-of-process mel predictor.
//!
//! One request at a time per directory. The caller writes `request.melf` (via a temporary
//! file and rename), then waits for the responder to publish `response.melf` by atomic
//! rename. A responder that cannot handle a request publishes `response.err` (UTF-8 text)
//! the same way. The responder should delete `request.melf` once it has read it; the caller
//! removes both response files after consuming them.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use nvsr_core::melbwe::{CutoffMask, MelPredictor};
use nvsr_core::{melf, MelScale, MelSpectrogram};

pub const REQUEST_FILE: &str = "request.melf";
pub const RESPONSE_FILE: &str = "response.melf";
pub const ERROR_FILE: &str = "response.err";
/// Environment variable naming the default exchange directory.
pub const EXCHANGE_DIR_ENV: &str = "NVSR_EXCHANGE_DIR";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, thiserror::Error)]
pub enum ExchangeError {
    #[error("exchange directory {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("no response after {waited:?}")]
    Timeout { waited: Duration },
    #[error("response shape {found:?} differs from request shape {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("malformed response: {0}")]
    Malformed(nvsr_core::Error),
    #[error("predictor reported: {0}")]
    Remote(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExchangeError + '_ {
    move |source| ExchangeError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to `dir/name` so that readers only ever observe the complete file.
pub fn publish(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), ExchangeError> {
    let tmp = dir.join(format!(".{name}.partial"));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    let dst = dir.join(name);
    fs::rename(&tmp, &dst).map_err(io_err(&dst))
}

fn remove_if_present(path: &Path) -> Result<(), ExchangeError> {
    match fs::remove_file(path) {
        Err(e) if e.kind() != io::ErrorKind::NotFound => Err(io_err(path)(e)),
        _ => Ok(()),
    }
}

/// Sends `mel` through the exchange directory and returns the responder's mel, in the scale
/// it was returned in.
pub fn external_predict(
    mel: &MelSpectrogram,
    dir: &Path,
    timeout: Duration,
) -> Result<MelSpectrogram, ExchangeError> {
    let response = dir.join(RESPONSE_FILE);
    let error = dir.join(ERROR_FILE);
    remove_if_present(&response)?;
    remove_if_present(&error)?;
    let request = melf::encode(mel).map_err(ExchangeError::Malformed)?;
    publish(dir, REQUEST_FILE, &request)?;

    let start = Instant::now();
    let mut delay = Duration::from_millis(2);
    loop {
        if error.exists() {
            let msg = fs::read_to_string(&error).map_err(io_err(&error))?;
            remove_if_present(&error)?;
            remove_if_present(&dir.join(REQUEST_FILE))?;
            return Err(ExchangeError::Remote(msg.trim().to_owned()));
        }
        if response.exists() {
            break;
        }
        let waited = start.elapsed();
        if waited >= timeout {
            remove_if_present(&dir.join(REQUEST_FILE))?;
            return Err(ExchangeError::Timeout { waited });
        }
        thread::sleep(delay.min(timeout.saturating_sub(waited)));
        delay = (delay * 2).min(Duration::from_millis(50));
    }
    let bytes = fs::read(&response).map_err(io_err(&response))?;
    remove_if_present(&response)?;
    remove_if_present(&dir.join(REQUEST_FILE))?;
    let out = melf::decode(&bytes).map_err(ExchangeError::Malformed)?;
    if out.shape() != mel.shape() {
        return Err(ExchangeError::ShapeMismatch {
            expected: mel.shape(),
            found: out.shape(),
        });
    }
    Ok(out)
}

/// [`MelPredictor`] backed by an exchange directory. Calls are serialized.
#[derive(Debug)]
pub struct ExchangePredictor {
    dir: PathBuf,
    timeout: Duration,
    /// Scale requested from the responder.
    scale: MelScale,
    lock: Mutex<()>,
}

impl ExchangePredictor {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            timeout: DEFAULT_TIMEOUT,
            scale: MelScale::Log,
            lock: Mutex::new(()),
        }
    }

    /// Directory from [`EXCHANGE_DIR_ENV`], if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(EXCHANGE_DIR_ENV).map(Self::new)
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_scale(mut self, scale: MelScale) -> Self {
        self.scale = scale;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl MelPredictor for ExchangePredictor {
    fn name(&self) -> &str {
        "external"
    }

    fn predict(
        &self,
        mel: &MelSpectrogram,
        _mask: &CutoffMask,
    ) -> nvsr_core::Result<MelSpectrogram> {
        let request = match self.scale {
            MelScale::Linear => mel.to_linear(),
            MelScale::Log => mel.to_log(),
        };
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        external_predict(&request, &self.dir, self.timeout)
            .map(|m| m.to_linear())
            .map_err(|e| nvsr_core::Error::Predictor(e.to_string()))
    }
}
