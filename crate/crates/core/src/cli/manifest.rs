//! Sequence manifest: frame and truth paths relative to the manifest's
//! directory, plus the generating seed and a config echo.
//!
//! ```text
//! seed = 42
//! dims = 99x90
//! mm_per_px = 0.35
//! frame = 0 frames/us_00000.pgm truth/truth_00000.contour
//! ```
//!
//! A `-` truth path means the frame has no truth contour.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imaging::Dims;

pub const MANIFEST_NAME: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct FrameEntry {
    pub index: usize,
    pub frame: PathBuf,
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub seed: u64,
    pub dims: Dims,
    pub mm_per_px: f64,
    pub entries: Vec<FrameEntry>,
    /// Free-form config echo, written as comments.
    pub config_echo: String,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "seed = {}", self.seed);
        let _ = writeln!(o, "dims = {}x{}", self.dims.width, self.dims.height);
        let _ = writeln!(o, "mm_per_px = {}", self.mm_per_px);
        for e in &self.entries {
            let truth = e.truth.as_ref().map_or("-".into(), |p| p.display().to_string());
            let _ = writeln!(o, "frame = {} {} {}", e.index, e.frame.display(), truth);
        }
        for line in self.config_echo.lines() {
            let _ = writeln!(o, "# {line}");
        }
        o
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut seed = None;
        let mut dims = None;
        let mut mm_per_px = None;
        let mut entries = Vec::new();
        let mut echo = String::new();
        let mut offset = 0;
        for raw in text.split_inclusive('\n') {
            let at = offset;
            offset += raw.len();
            let line = raw.trim();
            if let Some(c) = line.strip_prefix('#') {
                echo.push_str(c.strip_prefix(' ').unwrap_or(c));
                echo.push('\n');
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { what: "manifest", offset: at, msg };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            match key {
                "seed" => seed = Some(value.parse().map_err(|_| err(format!("bad seed {value:?}")))?),
                "dims" => {
                    let (w, h) = value
                        .split_once('x')
                        .and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)))
                        .ok_or_else(|| err(format!("bad dims {value:?}")))?;
                    dims = Some(Dims::new(w, h));
                }
                "mm_per_px" => {
                    mm_per_px = Some(value.parse().map_err(|_| err(format!("bad mm_per_px {value:?}")))?)
                }
                "frame" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    let [idx, frame, truth] = parts[..] else {
                        return Err(err(format!("frame entry needs index, frame and truth: {value:?}")));
                    };
                    entries.push(FrameEntry {
                        index: idx.parse().map_err(|_| err(format!("bad frame index {idx:?}")))?,
                        frame: PathBuf::from(frame),
                        truth: (truth != "-").then(|| PathBuf::from(truth)),
                    });
                }
                _ => return Err(err(format!("unknown manifest key {key:?}"))),
            }
        }
        let missing = |k: &str| Error::Parse {
            what: "manifest",
            offset: text.len(),
            msg: format!("missing `{k}`"),
        };
        if entries.windows(2).any(|w| w[1].index <= w[0].index) {
            return Err(Error::Parse {
                what: "manifest",
                offset: 0,
                msg: "frame indices must increase".into(),
            });
        }
        Ok(Self {
            seed: seed.ok_or_else(|| missing("seed"))?,
            dims: dims.ok_or_else(|| missing("dims"))?,
            mm_per_px: mm_per_px.ok_or_else(|| missing("mm_per_px"))?,
            entries,
            config_echo: echo,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_NAME);
        fs::write(&path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_NAME);
        if !path.exists() {
            return Err(Error::MissingArtifact(path));
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Manifest {
        Manifest {
            seed: 9,
            dims: Dims::new(99, 90),
            mm_per_px: 0.35,
            entries: vec![
                FrameEntry { index: 0, frame: "frames/us_00000.pgm".into(), truth: Some("truth/truth_00000.contour".into()) },
                FrameEntry { index: 1, frame: "frames/us_00001.pgm".into(), truth: None },
            ],
            config_echo: "synth.frames = 2\n".into(),
        }
    }

    #[test]
    fn round_trip() {
        let m = sample();
        let text = m.to_text();
        assert!(text.contains("frame = 1 frames/us_00001.pgm -\n"));
        assert_eq!(Manifest::parse(&text).unwrap(), m);
    }

    #[test]
    fn errors_carry_offsets() {
        let text = "seed = 1\ndims = 3y4\n";
        match Manifest::parse(text) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 9),
            other => panic!("{other:?}"),
        }
        assert!(Manifest::parse("dims = 3x4\nmm_per_px = 1\n").is_err());
        assert!(Manifest::parse("seed = 1\ndims = 3x4\nmm_per_px = 1\nframe = 2 a -\nframe = 1 b -\n").is_err());
    }

    #[test]
    fn missing_file_is_missing_artifact() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(Manifest::load(dir.path()), Err(Error::MissingArtifact(_))));
        sample().save(dir.path()).unwrap();
        assert_eq!(Manifest::load(dir.path()).unwrap(), sample());
    }
}
