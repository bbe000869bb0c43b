//! `crosslab`: surface generation, sweeps, packing, routing, reference
//! backends and drawing checks.
//!
//! Exit codes: 0 ok, 1 property violation, 2 generation failure, 64 usage,
//! 73 I/O.

mod check;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use crosslab::circlepack::{packing_area_check, thurston_pack, Triangulation};
use crosslab::drawing::{random_geometric_drawing, trial_seed, ExperimentRecord, CSV_HEADER};
use crosslab::geodesic::{build_portal_graph, PathParams};
use crosslab::oracles::{oracle_experiment, sphere_expected_crossings, Backend};
use crosslab::router::{random_cubic_graph, route_all_pairs, RouterError, RouterRecord, ROUTER_CSV_HEADER};
use crosslab::surface::{generate_surface, load_surface, CombinatorialSurface};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum Fail {
    Violation(String),
    Generation(String),
    Usage(String),
    Io(String),
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Violation(_) => 1,
            Fail::Generation(_) => 2,
            Fail::Usage(_) => 64,
            Fail::Io(_) => 73,
        }
    }

    fn message(&self) -> &str {
        match self {
            Fail::Violation(m) | Fail::Generation(m) | Fail::Usage(m) | Fail::Io(m) => m,
        }
    }
}

type Outcome = Result<(), Fail>;

#[derive(Parser)]
#[command(
    name = "crosslab",
    version,
    about = "Random geodesic drawings on hyperbolic surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random gluing table with F faces.
    Gen {
        #[arg(long)]
        faces: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the vertex triangulation for `pack`.
        #[arg(long)]
        triangulation: Option<PathBuf>,
    },
    /// Random drawings of K_n on several surfaces, one CSV row per trial.
    Sweep {
        /// Face counts to generate, or gluing-table files.
        #[arg(long, value_delimiter = ',', required_unless_present = "replay")]
        surfaces: Vec<String>,
        #[arg(long, required_unless_present = "replay")]
        n: Option<usize>,
        #[arg(long, required_unless_present = "replay")]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Generator seed for surfaces given by face count.
        #[arg(long, default_value_t = 1)]
        surface_seed: u64,
        /// Portals per triangulation edge.
        #[arg(long, default_value_t = PathParams::default().k)]
        k: usize,
        /// Target relative path error, recorded in the manifest.
        #[arg(long, default_value_t = PathParams::default().epsilon)]
        epsilon: f64,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Defaults to the CSV path with `.manifest.json` appended.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Re-run the sweep recorded in a manifest.
        #[arg(long, conflicts_with_all = ["surfaces", "n", "trials"])]
        replay: Option<PathBuf>,
    },
    /// One random drawing, written with its gluing table for `check`.
    Draw {
        #[arg(long, conflicts_with = "surface")]
        faces: Option<usize>,
        #[arg(long)]
        surface: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        surface_seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = PathParams::default().k)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Circle packing of a triangulation file.
    Pack {
        #[arg(long)]
        triangulation: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// All-pairs routing on random cubic graphs.
    Route {
        #[arg(long)]
        g: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of consecutive seeds starting at `seed`.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Random drawings on the sphere or a flat torus.
    Oracle {
        #[arg(long)]
        backend: Backend,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Recount and verify a drawing file.
    Check {
        #[arg(long)]
        drawing: PathBuf,
        /// Gluing table, for drawing files without an embedded one.
        #[arg(long)]
        surface: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(64)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = configure_threads().and_then(|()| run(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("crosslab: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn configure_threads() -> Outcome {
    let Ok(v) = std::env::var("CROSSLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = v
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Fail::Usage(format!("CROSSLAB_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Fail::Usage(e.to_string()))
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Gen {
            faces,
            seed,
            out,
            triangulation,
        } => gen(faces, seed, &out, triangulation.as_deref()),
        Command::Sweep {
            surfaces,
            n,
            trials,
            seed,
            surface_seed,
            k,
            epsilon,
            csv,
            svg,
            manifest,
            replay,
        } => {
            let plan = match replay {
                Some(path) => {
                    let m: Manifest = serde_json::from_str(&read(&path)?)
                        .map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))?;
                    m.into_plan()?
                }
                None => Plan::new(
                    &surfaces,
                    n.unwrap_or(0),
                    trials.unwrap_or(0),
                    seed,
                    surface_seed,
                    k,
                    epsilon,
                )?,
            };
            let manifest = manifest.unwrap_or_else(|| {
                let mut p = csv.clone().into_os_string();
                p.push(".manifest.json");
                PathBuf::from(p)
            });
            sweep(plan, &csv, svg.as_deref(), &manifest)
        }
        Command::Draw {
            faces,
            surface,
            surface_seed,
            n,
            seed,
            k,
            out,
        } => {
            let s = match (faces, surface) {
                (Some(f), None) => generated(f, surface_seed)?,
                (None, Some(p)) => surface_file(&p)?,
                _ => return Err(Fail::Usage("give exactly one of --faces, --surface".into())),
            };
            draw(&s, n, seed, k, &out)
        }
        Command::Pack {
            triangulation,
            tol,
            max_iter,
            out,
        } => pack(&triangulation, tol, max_iter, out.as_deref()),
        Command::Route {
            g,
            n,
            seed,
            seeds,
            csv,
        } => route(g, n, seed, seeds, csv.as_deref()),
        Command::Oracle {
            backend,
            n,
            trials,
            seed,
            csv,
        } => oracle(backend, n, trials, seed, csv.as_deref()),
        Command::Check { drawing, surface } => check::run(&drawing, surface.as_deref()),
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Fail::Io(format!("{}: {e}", path.display())))
}

/// Fails early on outputs that cannot be created.
fn probe_writable(path: &Path) -> Outcome {
    fs::OpenOptions::new()
        .write(true)
        .create(true)
        .truncate(false)
        .open(path)
        .map(drop)
        .map_err(|e| Fail::Io(format!("{}: {e}", path.display())))
}

fn check_faces(faces: usize) -> Outcome {
    if faces == 0 || !faces.is_multiple_of(16) {
        return Err(Fail::Usage(format!(
            "face count must be a positive multiple of 16, got {faces}"
        )));
    }
    Ok(())
}

fn generated(faces: usize, seed: u64) -> Result<CombinatorialSurface, Fail> {
    check_faces(faces)?;
    generate_surface(faces, seed).map_err(|e| Fail::Generation(e.to_string()))
}

fn surface_file(path: &Path) -> Result<CombinatorialSurface, Fail> {
    load_surface(&read(path)?).map_err(|e| Fail::Violation(format!("{}: {e}", path.display())))
}

fn gen(faces: usize, seed: u64, out: &Path, triangulation: Option<&Path>) -> Outcome {
    let s = generated(faces, seed)?;
    write(out, &s.table().serialize())?;
    if let Some(p) = triangulation {
        write(p, &Triangulation::from_surface(&s).to_json())?;
    }
    println!(
        "faces {} genus {} vertices {} edges {}",
        s.faces(),
        s.genus(),
        s.vertex_count(),
        s.edge_count()
    );
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestSurface {
    id: String,
    faces: usize,
    genus: usize,
    /// Generator seed, or `None` for surfaces read from a file.
    generator_seed: Option<u64>,
    /// Canonical gluing table.
    table: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    n: usize,
    trials: u64,
    master_seed: u64,
    portal_density: usize,
    epsilon: f64,
    seed_scheme: String,
    trial_seeds: Vec<u64>,
    surfaces: Vec<ManifestSurface>,
    csv: String,
    svg: Option<String>,
}

struct Plan {
    n: usize,
    trials: u64,
    seed: u64,
    k: usize,
    epsilon: f64,
    surfaces: Vec<(ManifestSurface, CombinatorialSurface)>,
}

impl Plan {
    fn new(
        specs: &[String],
        n: usize,
        trials: u64,
        seed: u64,
        surface_seed: u64,
        k: usize,
        epsilon: f64,
    ) -> Result<Self, Fail> {
        if k == 0 {
            return Err(Fail::Usage("--k must be positive".into()));
        }
        // Read every file and vet every face count before generating anything.
        let mut sources = Vec::new();
        for spec in specs {
            match spec.parse::<usize>() {
                Ok(f) => {
                    check_faces(f)?;
                    sources.push(Err(f));
                }
                Err(_) => sources.push(Ok((spec.clone(), read(Path::new(spec))?))),
            }
        }
        let mut surfaces = Vec::new();
        for source in sources {
            let (id, seed, s) = match source {
                Err(f) => (
                    format!("gen-{f}-{surface_seed}"),
                    Some(surface_seed),
                    generated(f, surface_seed)?,
                ),
                Ok((path, text)) => {
                    let s = load_surface(&text).map_err(|e| Fail::Violation(format!("{path}: {e}")))?;
                    (path, None, s)
                }
            };
            surfaces.push((
                ManifestSurface {
                    id,
                    faces: s.faces(),
                    genus: s.genus(),
                    generator_seed: seed,
                    table: s.table().serialize(),
                },
                s,
            ));
        }
        Ok(Plan {
            n,
            trials,
            seed,
            k,
            epsilon,
            surfaces,
        })
    }
}

impl Manifest {
    fn into_plan(self) -> Result<Plan, Fail> {
        let mut surfaces = Vec::new();
        for m in self.surfaces {
            let s = load_surface(&m.table)
                .map_err(|e| Fail::Violation(format!("manifest surface {}: {e}", m.id)))?;
            surfaces.push((m, s));
        }
        Ok(Plan {
            n: self.n,
            trials: self.trials,
            seed: self.master_seed,
            k: self.portal_density,
            epsilon: self.epsilon,
            surfaces,
        })
    }
}

fn sweep(plan: Plan, csv: &Path, svg_out: Option<&Path>, manifest_out: &Path) -> Outcome {
    for p in [Some(csv), svg_out, Some(manifest_out)].into_iter().flatten() {
        probe_writable(p)?;
    }
    let mut text = format!("{CSV_HEADER},normalized\n");
    let mut records: Vec<ExperimentRecord> = Vec::new();
    for (m, s) in &plan.surfaces {
        let graph = build_portal_graph(s, plan.k).map_err(|e| Fail::Generation(e.to_string()))?;
        let summary =
            crosslab::drawing::expectation_experiment(s, &m.id, &graph, plan.n, plan.trials, plan.seed)
                .map_err(|e| Fail::Violation(format!("{}: {e}", m.id)))?;
        for r in &summary.records {
            text.push_str(&format!("{},{}\n", r.csv_row(), r.normalized()));
        }
        eprintln!(
            "{}: g {} mean {:.3} std {:.3} multi-crossing pairs {}",
            m.id, m.genus, summary.mean, summary.std, summary.multi_crossing_pairs
        );
        records.extend(summary.records);
    }
    write(csv, &text)?;
    if let Some(path) = svg_out {
        let points: Vec<(f64, f64)> = records.iter().map(|r| (r.g as f64, r.normalized())).collect();
        write(path, &svg::scatter(&points, "genus g", "cr·g / (n⁴ log²(g+1))"))?;
    }
    let manifest = Manifest {
        tool: "crosslab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        n: plan.n,
        trials: plan.trials,
        master_seed: plan.seed,
        portal_density: plan.k,
        epsilon: plan.epsilon,
        seed_scheme: "trial t uses splitmix64(master + (t + 1) * 0x9e3779b97f4a7c15)".into(),
        trial_seeds: (0..plan.trials).map(|t| trial_seed(plan.seed, t)).collect(),
        surfaces: plan.surfaces.into_iter().map(|(m, _)| m).collect(),
        csv: csv.display().to_string(),
        svg: svg_out.map(|p| p.display().to_string()),
    };
    write(
        manifest_out,
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )
}

fn draw(s: &CombinatorialSurface, n: usize, seed: u64, k: usize, out: &Path) -> Outcome {
    let graph = build_portal_graph(s, k).map_err(|e| Fail::Usage(e.to_string()))?;
    let d = random_geometric_drawing(s, &graph, n, &mut ChaCha8Rng::seed_from_u64(seed))
        .map_err(|e| Fail::Violation(e.to_string()))?;
    let table: serde_json::Value = serde_json::from_str(&s.table().serialize()).expect("table is JSON");
    let drawing: serde_json::Value = serde_json::from_str(&d.to_json()).expect("drawing is JSON");
    let doc = serde_json::json!({ "surface": table, "drawing": drawing });
    write(out, &doc.to_string())
}

fn pack(path: &Path, tol: f64, max_iter: usize, out: Option<&Path>) -> Outcome {
    let tri = Triangulation::from_json(&read(path)?)
        .map_err(|e| Fail::Violation(format!("{}: {e}", path.display())))?;
    let packing = thurston_pack(&tri, tol, max_iter).map_err(|e| Fail::Violation(e.to_string()))?;
    let area =
        packing_area_check(&packing, tri.genus() as usize).map_err(|e| Fail::Violation(e.to_string()))?;
    let doc = serde_json::to_string_pretty(&packing).expect("packing serializes");
    match out {
        Some(p) => {
            write(p, &doc)?;
            println!(
                "residual {:e} after {} sweeps; area π·Σr² {:.6} ≤ disks {:.6} < {:.6}",
                packing.residual, packing.iterations, area.lhs, area.disks, area.rhs
            );
        }
        None => println!("{doc}"),
    }
    Ok(())
}

fn route(g: usize, n: usize, seed: u64, seeds: u64, csv: Option<&Path>) -> Outcome {
    let mut text = format!("{ROUTER_CSV_HEADER}\n");
    for s in seed..seed + seeds {
        let graph = random_cubic_graph(g, s).map_err(|e| match e {
            RouterError::VertexCount(_) => Fail::Usage(e.to_string()),
            RouterError::BudgetExhausted(_) => Fail::Generation(e.to_string()),
        })?;
        let record = RouterRecord::new(g, n, s, &route_all_pairs(&graph, n));
        text.push_str(&record.csv_row());
        text.push('\n');
    }
    match csv {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn oracle(backend: Backend, n: usize, trials: u64, seed: u64, csv: Option<&Path>) -> Outcome {
    if let Some(p) = csv {
        probe_writable(p)?;
    }
    let records = oracle_experiment(backend, n, trials, seed);
    let xs: Vec<f64> = records.iter().map(|r| r.crossings as f64).collect();
    let (mean, std) = crosslab::drawing::mean_std(&xs);
    let mut summary = serde_json::json!({
        "backend": backend.id(),
        "n": n,
        "trials": trials,
        "mean": mean,
        "std": std,
        "standard_error": std / (trials as f64).sqrt(),
        "degenerate_events": records.iter().map(|r| r.degenerate_events).sum::<u64>(),
    });
    if backend == Backend::Sphere {
        summary["expected"] = sphere_expected_crossings(n).into();
    }
    println!("{summary}");
    if let Some(p) = csv {
        let mut text = format!("{CSV_HEADER}\n");
        for r in &records {
            text.push_str(&r.csv_row());
            text.push('\n');
        }
        write(p, &text)?;
    }
    Ok(())
}
