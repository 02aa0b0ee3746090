//! The `scorelens` command line: `analyze`, `render` and `serve`.
//!
//! Exit codes: 0 success, 2 unreadable score or bundle, 3 I/O failure,
//! 4 invalid flags, 5 port already in use.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use scorelens::bundle::{self, AnalysisBundle, BundleError, ColorRequest};
use scorelens::colormap::{ColorAssignment, ColorError, ColorMode, ScaleId};
use scorelens::render::{render_compact, render_compressed, NoteMode, RenderConfig, RenderError};
use scorelens::{parse_score, ParseOptions, Track};

pub mod server;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("port {port} is already in use")]
    PortInUse { port: u16 },
    #[error("{0}")]
    Server(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Io { .. } | CliError::Server(_) => 3,
            CliError::Usage(_) => 4,
            CliError::PortInUse { .. } => 5,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

impl From<BundleError> for CliError {
    fn from(e: BundleError) -> Self {
        match e {
            BundleError::TrackOutOfRange { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<ColorError> for CliError {
    fn from(e: ColorError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<RenderError> for CliError {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::MissingTabData(_) | RenderError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "scorelens", version, about = "Similarity-based structure views for MusicXML scores")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze a MusicXML (.musicxml, .xml, .mxl) file and write the bundle.
    Analyze(AnalyzeArgs),
    /// Render a score or bundle to SVG.
    Render(RenderArgs),
    /// Analyze once and serve the bundle and viewer over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub input: PathBuf,
    /// Output path; standard output if omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Zero-based track (part) index.
    #[arg(long, default_value_t = 0)]
    pub track: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum View {
    Compact,
    Compressed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Notes {
    /// Fret numbers when every note carries tablature, piano roll otherwise.
    Auto,
    PianoRoll,
    TabSimple,
    TabFrets,
}

/// `mds`, `cluster`, `direct:<bar>` or `identical:<bar>` with a zero-based bar index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorArg {
    Mds,
    Cluster,
    Direct(usize),
    Identical(usize),
}

impl ColorArg {
    fn mode(self) -> ColorMode {
        match self {
            ColorArg::Mds => ColorMode::Mds,
            ColorArg::Cluster => ColorMode::Cluster,
            ColorArg::Direct(_) => ColorMode::Direct,
            ColorArg::Identical(_) => ColorMode::Identical,
        }
    }
}

impl FromStr for ColorArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let index = |v: &str| v.parse::<usize>().map_err(|_| format!("`{v}` is not a bar index"));
        match s.split_once(':') {
            None if s == "mds" => Ok(ColorArg::Mds),
            None if s == "cluster" => Ok(ColorArg::Cluster),
            Some(("direct", i)) => Ok(ColorArg::Direct(index(i)?)),
            Some(("identical", i)) => Ok(ColorArg::Identical(index(i)?)),
            _ => Err(format!("unknown color mode `{s}` (expected mds, cluster, direct:<i> or identical:<i>)")),
        }
    }
}

fn parse_scale(s: &str) -> Result<ScaleId, String> {
    s.parse()
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// MusicXML file or `.json` bundle.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = View::Compact)]
    pub view: View,
    #[arg(long, default_value = "mds")]
    pub color: ColorArg,
    /// spectral, blues, viridis, cividis or none; defaults to blues for
    /// direct/identical and spectral otherwise.
    #[arg(long, value_parser = parse_scale)]
    pub scale: Option<ScaleId>,
    /// Dendrogram cut height for `--color cluster`.
    #[arg(long, default_value_t = 0.3)]
    pub threshold: f64,
    #[arg(long, default_value_t = 8)]
    pub bars_per_row: usize,
    #[arg(long, value_enum, default_value_t = Notes::Auto)]
    pub notes: Notes,
    /// Zero-based track index; must match the bundle's track for bundle input.
    #[arg(long)]
    pub track: Option<usize>,
    /// Output path; standard output if omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory with the built viewer; a placeholder page is served without it.
    #[arg(long)]
    pub assets: Option<PathBuf>,
    #[arg(long)]
    pub track: Option<usize>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 4 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analyze(args) => analyze(&args),
        Command::Render(args) => render(&args),
        Command::Serve(args) => server::serve(&args),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    use std::io::Write;
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn looks_like_bundle(path: &Path, bytes: &[u8]) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{')
}

/// Parses and analyzes a score file.
pub fn analyze_file(path: &Path, track: usize) -> Result<AnalysisBundle, CliError> {
    let bytes = read(path)?;
    let parsed = parse_score(&bytes, &ParseOptions::default()).map_err(|e| CliError::Parse(e.to_string()))?;
    for w in &parsed.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(bundle::build_bundle(&parsed.score, track)?)
}

/// Reads a bundle, or analyzes a score, from `path`.
pub fn load_input(path: &Path, track: Option<usize>) -> Result<AnalysisBundle, CliError> {
    let bytes = read(path)?;
    if !looks_like_bundle(path, &bytes) {
        return analyze_file(path, track.unwrap_or(0));
    }
    let b = bundle::deserialize(&bytes)?;
    match track {
        Some(t) if t != b.analysis.track_index => Err(CliError::Usage(format!(
            "bundle was built for track {}, not track {t}",
            b.analysis.track_index
        ))),
        _ => Ok(b),
    }
}

fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let b = analyze_file(&args.input, args.track)?;
    write_output(args.out.as_deref(), &bundle::serialize(&b))
}

fn has_tab(track: &Track) -> bool {
    track.tuning.is_some() && track.notes().all(|(_, n)| n.string.is_some() && n.fret.is_some())
}

/// Bar colors for a render invocation.
pub fn bar_colors(b: &AnalysisBundle, color: ColorArg, scale: ScaleId, threshold: f64) -> Result<ColorAssignment, CliError> {
    if !(threshold >= 0.0) {
        return Err(CliError::Usage(format!("threshold {threshold} must be at least 0")));
    }
    let request = match color {
        ColorArg::Mds => ColorRequest::Mds,
        ColorArg::Cluster => ColorRequest::Cluster { threshold },
        ColorArg::Direct(i) => ColorRequest::Direct(i),
        ColorArg::Identical(i) => ColorRequest::Identical(i),
    };
    Ok(b.analysis.levels.bar.colors(request, &scale.scale())?)
}

/// Renders the requested view to SVG.
pub fn render_svg(b: &AnalysisBundle, args: &RenderArgs) -> Result<String, CliError> {
    let scale = args.scale.unwrap_or_else(|| args.color.mode().default_scale());
    let colors = bar_colors(b, args.color, scale, args.threshold)?;
    let track = b.track();
    let note_mode = match args.notes {
        Notes::Auto if has_tab(track) => NoteMode::TabFrets,
        Notes::Auto | Notes::PianoRoll => NoteMode::PianoRoll,
        Notes::TabSimple => NoteMode::TabSimple,
        Notes::TabFrets => NoteMode::TabFrets,
    };
    let config = RenderConfig { note_mode, bars_per_row: args.bars_per_row, scale, ..RenderConfig::default() };
    let svg = match args.view {
        View::Compact => render_compact(track, &colors, &config)?,
        View::Compressed => render_compressed(
            &b.analysis.repetition_tree,
            track,
            &b.analysis.canonical_ids,
            &colors,
            &config,
        )?,
    };
    Ok(svg)
}

fn render(args: &RenderArgs) -> Result<(), CliError> {
    let b = load_input(&args.input, args.track)?;
    let svg = render_svg(&b, args)?;
    write_output(args.out.as_deref(), svg.as_bytes())
}
