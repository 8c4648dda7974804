use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gestgrasp::config::{load_case, ParamTable, PipelineConfig};
use gestgrasp::eval::{eval_batch, write_case, EvalOptions};
use gestgrasp::geometry::PixelPoint;
use gestgrasp::gesture::canonicalize;
use gestgrasp::grasp::{direct_grasp, load_candidates, rotation_to_quaternion, select_grasp, AttentionMode};
use gestgrasp::gripper::hand_to_gripper_rotation;
use gestgrasp::io::{read_embedding, read_features, read_hand, read_keypoints, read_scene, write_report};
use gestgrasp::memory::{load_bank, save_bank, validate_bank, EntryRecord, MemoryBank, MANIFEST_FILE};
use gestgrasp::pipeline::{run_pipeline, Ablations, AtStage, Stage};
use gestgrasp::pointing::{locate_target, CropRect};
use gestgrasp::retrieval::retrieve;
use gestgrasp::synth::{synth_case, CaseSpec};
use gestgrasp::transfer::{transfer_contact, SearchWindow};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "gestgrasp", version, about = "Gesture-conditioned grasp selection")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cast the pointing ray and report the target pixel and crop.
    Point {
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Pointing-hand keypoints (JSON lines; first record used).
        #[arg(long)]
        keypoints: Option<PathBuf>,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Canonicalize every hand in a keypoints file.
    Canon {
        #[arg(long)]
        keypoints: PathBuf,
    },
    /// Add one entry to a memory bank (created if missing), then validate.
    Ingest {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        keypoints: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Source image size covered by the features.
        #[arg(long, num_args = 2, value_names = ["W", "H"])]
        image_dims: Vec<u32>,
        #[arg(long, num_args = 2, value_names = ["U", "V"], allow_negative_numbers = true)]
        contact: Vec<f64>,
        #[arg(long, default_value = "")]
        image_ref: String,
        #[arg(long)]
        category: Option<String>,
    },
    /// Two-stage retrieval of the best-matching bank entry.
    Retrieve {
        #[arg(long)]
        bank: Option<PathBuf>,
        /// Grasp-hand keypoints.
        #[arg(long)]
        keypoints: Option<PathBuf>,
        #[arg(long)]
        embedding: Option<PathBuf>,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Transfer a bank entry's contact point onto target features.
    Transfer {
        #[arg(long)]
        bank: Option<PathBuf>,
        #[arg(long)]
        entry: String,
        #[arg(long)]
        features: Option<PathBuf>,
        /// Target image size covered by the features.
        #[arg(long, num_args = 2, value_names = ["W", "H"])]
        image_dims: Vec<u32>,
        /// Restrict matches to the rectangle `U0 V0 W H`.
        #[arg(long, num_args = 4, value_names = ["U0", "V0", "W", "H"])]
        window: Vec<u32>,
    },
    /// Gripper rotation from a grasp hand.
    Rot {
        #[arg(long)]
        keypoints: Option<PathBuf>,
    },
    /// Select a grasp candidate, or build a direct grasp.
    Grasp {
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        candidates: Option<PathBuf>,
        /// Grasp-hand keypoints; identity orientation without.
        #[arg(long)]
        keypoints: Option<PathBuf>,
        #[arg(long, num_args = 2, value_names = ["U", "V"], required = true, allow_negative_numbers = true)]
        contact: Vec<f64>,
        /// Ignore candidates and build the grasp from contact and rotation.
        #[arg(long)]
        direct: bool,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Run the full pipeline on the inputs named by --config.
    Pipeline {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        ablations: AblationFlags,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate every case directory under CASES.
    Eval {
        cases: PathBuf,
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        ablations: AblationFlags,
        #[arg(long)]
        sr_threshold: Option<f64>,
        /// Also write the machine-readable report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Generate synthetic case directories.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        cases: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        bank_entries: usize,
    },
}

#[derive(Args, Default)]
struct ParamFlags {
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    crop_size: Option<u32>,
    #[arg(long)]
    self_exclusion: Option<f64>,
    #[arg(long)]
    refine_radius: Option<f64>,
    #[arg(long)]
    inlier_threshold: Option<f64>,
    #[arg(long)]
    ransac_iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_enum)]
    attention: Option<Attention>,
    #[arg(long)]
    standoff: Option<f64>,
    /// Include stage timings (reports are then no longer byte-identical).
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Attention {
    Off,
    Weight,
}

impl ParamFlags {
    fn table(&self) -> ParamTable {
        ParamTable {
            top_k: self.top_k,
            epsilon: self.epsilon,
            crop_size: self.crop_size,
            self_exclusion: self.self_exclusion,
            refine_radius: self.refine_radius,
            inlier_threshold: self.inlier_threshold,
            ransac_iterations: self.ransac_iterations,
            seed: self.seed,
            lambda: self.lambda,
            sigma: self.sigma,
            attention: self.attention.map(|a| match a {
                Attention::Off => AttentionMode::Off,
                Attention::Weight => AttentionMode::Weight,
            }),
            standoff: self.standoff,
            record_timings: self.timings.then_some(true),
        }
    }
}

#[derive(Args, Default)]
struct AblationFlags {
    #[arg(long)]
    no_pointing: bool,
    #[arg(long)]
    no_transfer: bool,
    #[arg(long)]
    no_rotation: bool,
    #[arg(long)]
    no_grasp_model: bool,
    #[arg(long)]
    no_grasp_gesture: bool,
}

impl AblationFlags {
    fn get(&self) -> Ablations {
        Ablations {
            no_pointing: self.no_pointing,
            no_transfer: self.no_transfer,
            no_rotation: self.no_rotation,
            no_grasp_model: self.no_grasp_model,
            no_grasp_gesture: self.no_grasp_gesture,
        }
    }
}

/// Config loaded from `--config`, if any.
struct Ctx {
    config: Option<PipelineConfig>,
}

impl Ctx {
    fn params(&self, flags: &ParamFlags) -> anyhow::Result<gestgrasp::pipeline::PipelineParams> {
        let base = self.config.as_ref().map(|c| c.params.clone()).unwrap_or_default();
        Ok(base.merged(&flags.table()).resolve().at(Stage::Config)?)
    }

    /// Flag value, else the config's input path, else an error naming both.
    fn path(
        &self,
        flag: Option<PathBuf>,
        pick: impl Fn(&PipelineConfig) -> Option<PathBuf>,
        name: &str,
    ) -> anyhow::Result<PathBuf> {
        flag.or_else(|| self.config.as_ref().and_then(pick))
            .ok_or_else(|| anyhow!("[config] --{name} is required (or set inputs.{name} in --config)"))
    }
}

fn print_json<T: Serialize>(v: &T) {
    say(&serde_json::to_string_pretty(v).expect("json"));
}

/// Writes a line to stdout; a closed pipe is not an error.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn pair<T: Copy>(v: &[T], name: &str) -> anyhow::Result<Option<(T, T)>> {
    match v {
        [] => Ok(None),
        [a, b] => Ok(Some((*a, *b))),
        _ => Err(anyhow!("[config] --{name} takes two values")),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = Ctx {
        config: cli.config.as_deref().map(PipelineConfig::load).transpose().at(Stage::Config)?,
    };
    match cli.command {
        Command::Point { scene, keypoints, params } => {
            let scene_path = ctx.path(scene, |c| Some(c.inputs.scene.clone()), "scene")?;
            let hand_path = ctx.path(keypoints, |c| Some(c.inputs.pointing.clone()), "pointing")?;
            let p = ctx.params(&params)?;
            let scene = read_scene(&scene_path).at(Stage::Input)?;
            let hand = read_hand(&hand_path).at(Stage::Input)?;
            print_json(&locate_target(&hand, &scene, &p.pointing).at(Stage::Pointing)?);
        }
        Command::Canon { keypoints } => {
            for h in read_keypoints(&keypoints).at(Stage::Input)? {
                let c = canonicalize(&h).at(Stage::Retrieval)?;
                say(&serde_json::to_string(&c).expect("json"));
            }
        }
        Command::Ingest { bank, id, keypoints, embedding, features, image_dims, contact, image_ref, category } => {
            let dims = pair(&image_dims, "image-dims")?.ok_or_else(|| anyhow!("[config] --image-dims is required"))?;
            let (u, v) = pair(&contact, "contact")?.ok_or_else(|| anyhow!("[config] --contact is required"))?;
            let mut mb = if bank.join(MANIFEST_FILE).exists() {
                load_bank(&bank).at(Stage::Input)?
            } else {
                MemoryBank::new()
            };
            let rec = EntryRecord {
                id,
                gesture: read_hand(&keypoints).at(Stage::Input)?,
                embedding: read_embedding(&embedding).at(Stage::Input)?,
                features: read_features(&features, dims).at(Stage::Input)?,
                image_ref,
                contact: PixelPoint::new(u, v),
                category,
            };
            mb.ingest(rec).at(Stage::Input)?;
            save_bank(&mb, &bank).at(Stage::Input)?;
            let report = validate_bank(&mb);
            print_json(&report);
            if !report.is_clean() {
                return Err(anyhow!("[input] bank validation reported {} finding(s)", report.findings.len()));
            }
        }
        Command::Retrieve { bank, keypoints, embedding, params } => {
            let p = ctx.params(&params)?;
            let bank = load_bank(&ctx.path(bank, |c| Some(c.inputs.bank.clone()), "bank")?).at(Stage::Input)?;
            let hand = read_hand(&ctx.path(keypoints, |c| Some(c.inputs.grasp.clone()), "grasp")?).at(Stage::Input)?;
            let emb = read_embedding(&ctx.path(embedding, |c| Some(c.inputs.embedding.clone()), "embedding")?)
                .at(Stage::Input)?;
            print_json(&retrieve(&hand, &emb, &bank, p.top_k).at(Stage::Retrieval)?);
        }
        Command::Transfer { bank, entry, features, image_dims, window } => {
            let bank = load_bank(&ctx.path(bank, |c| Some(c.inputs.bank.clone()), "bank")?).at(Stage::Input)?;
            let e = bank
                .get(&entry)
                .ok_or_else(|| anyhow!("[transfer] no entry {entry:?} in bank"))?;
            let dims = match pair(&image_dims, "image-dims")? {
                Some(d) => d,
                None => {
                    let c = ctx.config.as_ref().ok_or_else(|| anyhow!("[config] --image-dims is required"))?;
                    match c.inputs.features_image_dims {
                        Some(d) => d,
                        None => {
                            let s = read_scene(&c.inputs.scene).at(Stage::Input)?;
                            (s.width(), s.height())
                        }
                    }
                }
            };
            let fpath = ctx.path(features, |c| Some(c.inputs.features.clone()), "features")?;
            let tgt = read_features(&fpath, dims).at(Stage::Input)?;
            let win = match window[..] {
                [] => None,
                [u0, v0, w, h] => Some(SearchWindow::Rect(CropRect { u0, v0, w, h })),
                _ => return Err(anyhow!("[config] --window takes four values")),
            };
            print_json(&transfer_contact(&e.features, e.contact, &tgt, win).at(Stage::Transfer)?);
        }
        Command::Rot { keypoints } => {
            let hand = read_hand(&ctx.path(keypoints, |c| Some(c.inputs.grasp.clone()), "grasp")?).at(Stage::Input)?;
            let r = hand_to_gripper_rotation(&hand).at(Stage::Rotation)?;
            print_json(&serde_json::json!({ "rotation": r, "quaternion_wxyz": rotation_to_quaternion(&r) }));
        }
        Command::Grasp { scene, candidates, keypoints, contact, direct, params } => {
            let p = ctx.params(&params)?;
            let (u, v) = pair(&contact, "contact")?.expect("clap enforces --contact");
            let contact = PixelPoint::new(u, v);
            let scene = read_scene(&ctx.path(scene, |c| Some(c.inputs.scene.clone()), "scene")?).at(Stage::Input)?;
            let r_h = match keypoints.or_else(|| ctx.config.as_ref().map(|c| c.inputs.grasp.clone())) {
                Some(k) => hand_to_gripper_rotation(&read_hand(&k).at(Stage::Input)?).at(Stage::Rotation)?,
                None => gestgrasp::geometry::Rotation3::IDENTITY,
            };
            if direct {
                print_json(&direct_grasp(contact, &scene, &r_h, p.standoff).at(Stage::Grasp)?);
            } else {
                let cpath = ctx.path(candidates, |c| c.inputs.candidates.clone(), "candidates")?;
                let cands = load_candidates(&cpath).at(Stage::Input)?;
                print_json(&select_grasp(&cands, &r_h, contact, scene.intrinsics(), &p.selection).at(Stage::Grasp)?);
            }
        }
        Command::Pipeline { params, ablations, out } => {
            let cfg = ctx.config.clone().ok_or_else(|| anyhow!("[config] pipeline needs --config"))?;
            let mut cfg = cfg.with_ablations(ablations.get());
            cfg.params = cfg.params.merged(&params.table());
            let case = load_case(&cfg)?;
            let report = run_pipeline(&case.bank, &case.inputs, &case.params, &case.ablations)?;
            emit(&report.to_json(), out.as_deref())?;
        }
        Command::Eval { cases, params, ablations, sr_threshold, json } => {
            let base = ctx.config.as_ref().map(|c| c.params.clone()).unwrap_or_default();
            let opts = EvalOptions {
                ablations: ablations.get(),
                params: base.merged(&params.table()),
                sr_threshold,
            };
            let report = eval_batch(&cases, &opts).at(Stage::Eval)?;
            say(&report.to_table());
            if let Some(path) = json {
                write_report(&path, &report.to_json()).at(Stage::Eval)?;
            }
        }
        Command::Synth { out, cases, seed, bank_entries } => {
            let table = ParamTable { crop_size: Some(80), ..Default::default() };
            for i in 0..cases {
                let spec = CaseSpec { seed: seed + i, bank_entries, ..CaseSpec::default() };
                let case = synth_case(&spec).at(Stage::Input)?;
                let dir = out.join(format!("case_{:03}", i));
                write_case(&case, &dir, &table).at(Stage::Input)?;
                say(&dir.display().to_string());
            }
        }
    }
    Ok(())
}

fn emit(text: &str, path: Option<&Path>) -> anyhow::Result<()> {
    match path {
        Some(p) => write_report(p, text).with_context(|| format!("[input] writing {}", p.display())),
        None => {
            say(text);
            Ok(())
        }
    }
}

/// The error and any causes not already spelled out in it.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !msg.contains(&c) {
            msg = format!("{msg}: {c}");
        }
    }
    msg
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gestgrasp: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}
