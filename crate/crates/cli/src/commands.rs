use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use umc_core::datagen::{self, SynthSpec};
use umc_core::mesh_core::io;
use umc_core::metrics::{self, max_abs_error, rel_l2_error, timed};
use umc_core::pipeline::compress_baseline_archive;
use umc_core::{
    build_grid, compress, decompress, Archive, BackInterpKind, CodecRegistry, CompressOptions, ErrorBudget, ExternalCodec,
    Field, GridBuildConfig, Layout, MappingMode, Mesh, MeshFormat, Method, RunRecord,
};

use crate::args::*;
use crate::Failure;

type CmdResult = Result<(), Failure>;

fn contract(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Contract(e.into())
}

fn usage(msg: String) -> Failure {
    Failure::Usage(anyhow!(msg))
}

fn need_input(path: &Path) -> CmdResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("input file {} does not exist", path.display())))
    }
}

fn need_output(path: &Path) -> CmdResult {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if parent.is_dir() {
        Ok(())
    } else {
        Err(usage(format!("output directory {} does not exist", parent.display())))
    }
}

fn load_mesh(path: &Path) -> Result<Mesh, Failure> {
    io::load_mesh(path, MeshFormat::from_path(path)).with_context(|| format!("loading mesh {}", path.display())).map_err(contract)
}

fn load_field(path: &Path) -> Result<Field, Failure> {
    io::load_field(path).with_context(|| format!("loading field {}", path.display())).map_err(contract)
}

fn registry(externals: &[ExternalSpec]) -> Result<CodecRegistry, Failure> {
    let mut reg = CodecRegistry::default();
    for ext in externals {
        let codec = ExternalCodec::from_command_line(&ext.command).map_err(contract)?;
        reg.register_external_codec(ext.id, codec).map_err(contract)?;
    }
    Ok(reg)
}

fn describe_grid(cfg: &GridBuildConfig, mesh: &Mesh) -> Result<umc_core::Coarsened, Failure> {
    let (init, coarse) = build_grid(mesh, cfg).map_err(contract)?;
    for (d, axis) in init.axes.iter().enumerate() {
        println!(
            "axis {d}: spacing {:.6e} (percentile {}{}) nodes {} -> {}",
            axis.spacing,
            axis.percentile,
            if axis.fallback { ", g-max fallback" } else { "" },
            init.grid.shape()[d],
            coarse.grid.shape()[d],
        );
    }
    let mode = match coarse.mapping.mode() {
        MappingMode::Dense => "dense",
        MappingMode::Seed => "seed",
    };
    println!("visited_fraction {:.6} mode {mode}", coarse.visited_fraction);
    Ok(coarse)
}

pub fn synth(a: SynthArgs) -> CmdResult {
    need_output(&a.mesh)?;
    need_output(&a.field)?;
    let spec = SynthSpec { dim: a.dim, n_target: a.n, style: a.style, field: a.kind, seed: a.seed };
    let mesh = datagen::gen_mesh(&spec).map_err(contract)?;
    let field = datagen::gen_field(&mesh, &spec).map_err(contract)?;
    io::save_mesh(&mesh, &a.mesh, MeshFormat::from_path(&a.mesh)).map_err(contract)?;
    io::save_field(&field, &a.field).map_err(contract)?;
    println!(
        "{} vertices, {} cells, field {} range {:.6e}",
        mesh.num_vertices(),
        mesh.num_cells(),
        field.name(),
        field.range()
    );
    Ok(())
}

pub fn build_grid_cmd(a: BuildGridArgs) -> CmdResult {
    need_input(&a.mesh)?;
    need_output(&a.grid)?;
    need_output(&a.mapping)?;
    let mesh = load_mesh(&a.mesh)?;
    let coarse = describe_grid(&a.grid_opts.config(a.grid_opts.percentile), &mesh)?;
    io::save_grid(&coarse.grid, &a.grid).map_err(contract)?;
    io::save_mapping(&coarse.mapping, &a.mapping).map_err(contract)?;
    Ok(())
}

/// Grid and mapping from files, or built from the mesh.
fn obtain_layout(
    grid: Option<&PathBuf>,
    mapping: Option<&PathBuf>,
    mesh: Option<&Mesh>,
    kind: BackInterpKind,
    grid_opts: &GridOpts,
) -> Result<Layout, Failure> {
    let (grid, mapping) = match (grid, mapping) {
        (Some(g), Some(m)) => (io::load_grid(g).map_err(contract)?, io::load_mapping(m).map_err(contract)?),
        _ => {
            let mesh = mesh.expect("checked by caller");
            let coarse = describe_grid(&grid_opts.config(grid_opts.percentile), mesh)?;
            (coarse.grid, coarse.mapping)
        }
    };
    Layout::new(grid, mapping, kind, mesh).map_err(contract)
}

fn check_layout_inputs(
    grid: Option<&PathBuf>,
    mapping: Option<&PathBuf>,
    mesh: Option<&PathBuf>,
    kind: BackInterpKind,
) -> CmdResult {
    for p in [grid, mapping, mesh].into_iter().flatten() {
        need_input(p)?;
    }
    if grid.is_none() && mesh.is_none() {
        return Err(usage("either --grid and --mapping or --mesh is required".into()));
    }
    if kind == BackInterpKind::Multilinear && mesh.is_none() {
        return Err(usage("multilinear back-interpolation needs --mesh".into()));
    }
    Ok(())
}

pub fn compress_cmd(a: CompressArgs) -> CmdResult {
    need_input(&a.field)?;
    need_output(&a.out)?;
    let kind = BackInterpKind::from(a.interp);
    if !a.baseline {
        check_layout_inputs(a.grid.as_ref(), a.mapping.as_ref(), a.mesh.as_ref(), kind)?;
    } else if let Some(m) = &a.mesh {
        need_input(m)?;
    }
    let reg = registry(&a.codec.externals)?;
    let budget = ErrorBudget::new(a.tau, a.rho, a.tau_kind.into()).map_err(contract)?;
    let field = load_field(&a.field)?;
    let mesh = a.mesh.as_deref().map(load_mesh).transpose()?;
    if let Some(mesh) = &mesh {
        field.check_mesh(mesh).map_err(contract)?;
    }
    let opts = CompressOptions { fill: a.fill.into(), backend: a.codec.backend, ..CompressOptions::with_codec(a.codec.codec) };

    let archive = if a.baseline {
        compress_baseline_archive(&field, &budget, &opts, &reg).map_err(contract)?
    } else {
        let layout = obtain_layout(a.grid.as_ref(), a.mapping.as_ref(), mesh.as_ref(), kind, &a.grid_opts)?;
        compress(&field, &layout, &budget, &opts, &reg).map_err(contract)?
    };
    archive.write(&a.out).map_err(contract)?;
    println!(
        "tau_abs {:.6e} original {} B compressed {} B CR {:.4}{}",
        archive.tau_abs,
        archive.original_bytes(),
        archive.compressed_bytes(),
        archive.compression_ratio(),
        if archive.overrides.is_empty() { String::new() } else { format!(" overrides {}", archive.overrides.len()) }
    );
    Ok(())
}

pub fn decompress_cmd(a: DecompressArgs) -> CmdResult {
    need_input(&a.archive)?;
    need_output(&a.out)?;
    let archive = Archive::read(&a.archive).map_err(contract)?;
    let layout = if archive.is_baseline() {
        None
    } else {
        check_layout_inputs(a.grid.as_ref(), a.mapping.as_ref(), a.mesh.as_ref(), archive.back_kind)?;
        let mesh = a.mesh.as_deref().map(load_mesh).transpose()?;
        Some(obtain_layout(a.grid.as_ref(), a.mapping.as_ref(), mesh.as_ref(), archive.back_kind, &a.grid_opts)?)
    };
    let reg = registry(&a.externals)?;
    let field = decompress(&archive, layout.as_ref(), &reg).map_err(contract)?;
    io::save_field(&field, &a.out).map_err(contract)?;
    println!("{} values written to {}", field.len(), a.out.display());
    Ok(())
}

pub fn verify(a: VerifyArgs) -> CmdResult {
    need_input(&a.field)?;
    need_input(&a.reconstructed)?;
    if let Some(m) = &a.mesh {
        need_input(m)?;
    }
    let original = load_field(&a.field)?;
    let recon = load_field(&a.reconstructed)?;
    if let Some(m) = &a.mesh {
        let mesh = load_mesh(m)?;
        original.check_mesh(&mesh).map_err(contract)?;
        recon.check_mesh(&mesh).map_err(contract)?;
    }
    let budget = ErrorBudget::new(a.tau, 0.5, a.tau_kind.into()).map_err(contract)?;
    let tau_abs = budget.tau_abs(original.values());
    let worst = max_abs_error(original.values(), recon.values()).map_err(contract)?;
    let l2 = rel_l2_error(original.values(), recon.values());
    println!("max_abs_err {:.6e}", worst.value);
    match &l2 {
        Ok(v) => println!("rel_l2 {v:.6e}"),
        Err(e) => println!("rel_l2 undefined ({e})"),
    }
    println!("tau_abs {tau_abs:.6e}");
    let ok = worst.value <= tau_abs;
    if ok {
        println!("PASS");
        Ok(())
    } else {
        let at = worst.index.map_or_else(|| "?".to_owned(), |i| i.to_string());
        Err(contract(anyhow!("bound violated at vertex {at}: |error| {:.6e} > tau_abs {tau_abs:.6e}", worst.value)))
    }
}

enum Cell {
    Baseline { tau: f64 },
    Mc { k_index: usize, rho: f64, tau: f64 },
}

struct SweepCtx<'a> {
    args: &'a SweepArgs,
    dataset: String,
    mesh: &'a Mesh,
    field: &'a Field,
    registry: &'a CodecRegistry,
    /// Per percentile, when mappings are shared.
    layouts: Vec<Option<Arc<Layout>>>,
}

impl SweepCtx<'_> {
    fn opts(&self) -> CompressOptions {
        CompressOptions {
            fill: self.args.fill.into(),
            backend: self.args.codec.backend,
            ..CompressOptions::with_codec(self.args.codec.codec)
        }
    }

    fn layout(&self, k_index: usize) -> umc_core::Result<Arc<Layout>> {
        if let Some(l) = &self.layouts[k_index] {
            return Ok(l.clone());
        }
        build_layout(self.args, self.mesh, self.args.percentiles[k_index]).map(Arc::new)
    }

    fn run(&self, cell: &Cell) -> umc_core::Result<RunRecord> {
        let (rho, tau, k) = match *cell {
            Cell::Baseline { tau } => (umc_core::pipeline::DEFAULT_RHO, tau, None),
            Cell::Mc { k_index, rho, tau } => (rho, tau, Some(k_index)),
        };
        let budget = ErrorBudget::new(tau, rho, self.args.tau_kind.into())?;
        let opts = self.opts();
        let (archive, layout, t_encode) = match k {
            None => {
                let (a, t) = timed(|| compress_baseline_archive(self.field, &budget, &opts, self.registry));
                (a?, None, t)
            }
            Some(ki) => {
                let layout = self.layout(ki)?;
                let (a, t) = timed(|| compress(self.field, &layout, &budget, &opts, self.registry));
                (a?, Some(layout), t)
            }
        };
        let (back, t_decode) = timed(|| decompress(&archive, layout.as_deref(), self.registry));
        let back = back?;
        let worst = max_abs_error(self.field.values(), back.values())?;
        let eps = rel_l2_error(self.field.values(), back.values()).unwrap_or(f64::NAN);
        let relative = self.args.tau_kind == TauKind::Rel;
        Ok(RunRecord {
            dataset: self.dataset.clone(),
            field: self.field.name().to_owned(),
            method: if k.is_some() { Method::Mc } else { Method::Default },
            codec: self.args.codec.codec,
            tau_rel: relative.then_some(tau),
            tau_abs: archive.tau_abs,
            cr: archive.compression_ratio(),
            eps_l2: eps,
            max_err: worst.value,
            t_encode,
            t_decode,
            k: k.map(|i| self.args.percentiles[i]),
            rho: k.map(|_| rho),
        })
    }
}

fn build_layout(args: &SweepArgs, mesh: &Mesh, percentile: f64) -> umc_core::Result<Layout> {
    let (_, coarse) = build_grid(mesh, &args.grid_config(percentile))?;
    let kind = BackInterpKind::from(args.interp);
    Layout::new(coarse.grid, coarse.mapping, kind, Some(mesh))
}

pub fn sweep(a: SweepArgs) -> CmdResult {
    need_input(&a.mesh)?;
    need_input(&a.field)?;
    for p in [&a.out, &a.json].into_iter().flatten() {
        need_output(p)?;
    }
    if a.percentiles.is_empty() || a.rhos.is_empty() || a.taus.is_empty() {
        return Err(usage("sweep lists must be nonempty".into()));
    }
    let jobs = a.jobs.map_or_else(|| std::thread::available_parallelism().map_or(1, usize::from), |j| j as usize);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(contract)?;

    let reg = registry(&a.codec.externals)?;
    let mesh = load_mesh(&a.mesh)?;
    let field = load_field(&a.field)?;
    field.check_mesh(&mesh).map_err(contract)?;
    // fail fast on inadmissible budgets
    for &rho in &a.rhos {
        for &tau in &a.taus {
            ErrorBudget::new(tau, rho, a.tau_kind.into()).map_err(contract)?;
        }
    }

    let layouts = if a.reuse_map {
        let built: umc_core::Result<Vec<Layout>> =
            pool.install(|| a.percentiles.par_iter().map(|&k| build_layout(&a, &mesh, k)).collect());
        built.map_err(contract)?.into_iter().map(|l| Some(Arc::new(l))).collect()
    } else {
        vec![None; a.percentiles.len()]
    };
    let dataset = a.dataset.clone().unwrap_or_else(|| {
        a.mesh.file_stem().map_or_else(|| "mesh".to_owned(), |s| s.to_string_lossy().into_owned())
    });

    let mut cells: Vec<Cell> = a.taus.iter().map(|&tau| Cell::Baseline { tau }).collect();
    for k_index in 0..a.percentiles.len() {
        for &rho in &a.rhos {
            for &tau in &a.taus {
                cells.push(Cell::Mc { k_index, rho, tau });
            }
        }
    }
    let ctx = SweepCtx { args: &a, dataset, mesh: &mesh, field: &field, registry: &reg, layouts };
    let records: umc_core::Result<Vec<RunRecord>> = pool.install(|| cells.par_iter().map(|c| ctx.run(c)).collect());
    let records = records.map_err(contract)?;

    let csv = metrics::emit_report(&records).map_err(contract)?;
    match &a.out {
        Some(p) => fs::write(p, &csv).with_context(|| format!("writing {}", p.display())).map_err(contract)?,
        None => print!("{}", String::from_utf8_lossy(&csv)),
    }
    if let Some(p) = &a.json {
        let json = metrics::emit_report_json(&records).map_err(contract)?;
        fs::write(p, json).with_context(|| format!("writing {}", p.display())).map_err(contract)?;
    }
    let violations = records.iter().filter(|r| !r.within_bound()).count();
    if violations > 0 {
        return Err(contract(anyhow!("{violations} runs exceeded their bound")));
    }
    if a.out.is_some() {
        println!("{} runs written", records.len());
    }
    Ok(())
}
