use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use filtra::filter::{build_stack_k, build_stack_kbar, FilterGrid, InterpolationMode};
use filtra::group::GroupSpec;
use filtra::harness::{run_suite, write_report_csv, SuiteConfig};
use filtra::io::{filter_matrix_to_pgm, filter_to_csv, filter_to_pgm, load_filter, matrix_to_csv};
use filtra::kernel::{
    capacity_report, kernel_irrep_to_reg_cn, kernel_irrep_to_reg_dn, kernel_orn,
    kernel_reg_to_reg_cn, kernel_reg_to_reg_dn, kernel_triv_to_reg_cn, kernel_triv_to_reg_dn,
    CapacityKind, FilterMatrix, SteerableKernel,
};
use filtra::repr::{decompose_regular, rho_regular};
use nalgebra::DMatrix;

#[derive(Parser)]
#[command(
    name = "filtra",
    version,
    about = "Steerable C_N / D_N kernels built by filter transform"
)]
struct Cli {
    /// Worker threads for parallel checks (default: available processors).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the equivariance suite; exit 1 if an exact-subgroup check fails.
    Verify(VerifyArgs),
    /// Build one kernel and write each grid entry to a file.
    Gen(GenArgs),
    /// Print the regular representation of one element and its decomposition.
    Decompose(DecomposeArgs),
    /// Weight accounting for regular-to-regular kernels.
    Capacity(CapacityArgs),
    /// Write PGM montages of every construction for one base filter.
    Demo(DemoArgs),
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    group: Vec<GroupSpec>,
    #[arg(long, value_delimiter = ',', default_value = "3")]
    size: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "bilinear")]
    mode: Vec<InterpolationMode>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Side length of the random feature maps used for the feature-level check.
    #[arg(long, default_value_t = 15)]
    feature_size: usize,
    /// Write per-element residuals as CSV.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Triv2reg,
    Irrep2reg,
    Reg2reg,
    Orn,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenFormat {
    Csv,
    Pgm,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    group: GroupSpec,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    j: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Use the reflected stack for a C_N irrep kernel.
    #[arg(long)]
    conjugate: bool,
    #[arg(long, value_delimiter = ',', required = true)]
    base: Vec<PathBuf>,
    #[arg(long, default_value = "bilinear")]
    mode: InterpolationMode,
    #[arg(long)]
    out: PathBuf,
    /// `pgm` writes a PGM next to every CSV.
    #[arg(long, value_enum, default_value = "csv")]
    format: GenFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MatrixFormat {
    Text,
    Csv,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    group: GroupSpec,
    /// Element as `i0,i1`.
    #[arg(long)]
    element: String,
    #[arg(long, value_enum, default_value = "text")]
    format: MatrixFormat,
}

#[derive(Args)]
struct CapacityArgs {
    #[arg(long)]
    group: GroupSpec,
    #[arg(long)]
    size: usize,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long, default_value = "d8")]
    group: GroupSpec,
    #[arg(long, default_value_t = 1)]
    j: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "bilinear")]
    mode: InterpolationMode,
}

enum Failure {
    Usage(String),
    Checks,
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<filtra::Error> for Failure {
    fn from(e: filtra::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            return report(usage("--threads must be at least 1"));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return report(Failure::Runtime(e.into()));
        }
    }
    let outcome = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Gen(a) => gen(a),
        Command::Decompose(a) => decompose(a),
        Command::Capacity(a) => capacity(a),
        Command::Demo(a) => demo(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    match f {
        Failure::Usage(msg) => {
            eprintln!("error: {msg}\n");
            eprintln!("{}", Cli::command().render_usage());
            ExitCode::from(2)
        }
        Failure::Checks => ExitCode::from(1),
        Failure::Runtime(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn verify(a: VerifyArgs) -> CmdResult {
    if a.size.iter().any(|s| s % 2 == 0) {
        return Err(usage("--size values must be odd"));
    }
    let reports = run_suite(&SuiteConfig {
        groups: a.group,
        sizes: a.size,
        modes: a.mode,
        seed: a.seed,
        feature_size: a.feature_size,
    })?;
    if let Some(path) = &a.report {
        let file =
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = std::io::BufWriter::new(file);
        write_report_csv(&reports, &mut out)
            .and_then(|_| out.flush())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let mut stdout = std::io::stdout().lock();
    let mut failures = 0;
    for r in &reports {
        let status = if r.passed() { "ok" } else { "FAIL" };
        failures += usize::from(!r.passed());
        writeln!(
            stdout,
            "{status:4} {:<24} {} S={} {:<8} exact={:.3e} all={:.3e} feature={:.3e}",
            r.kernel_kind,
            r.group,
            r.size,
            r.mode,
            r.exact_subgroup_max,
            r.full_group_max,
            r.feature_exact_max
        )
        .context("writing to stdout")?;
    }
    writeln!(
        stdout,
        "{} kernels checked, {failures} failed",
        reports.len()
    )
    .context("writing to stdout")?;
    if failures > 0 {
        Err(Failure::Checks)
    } else {
        Ok(())
    }
}

fn load_bases(paths: &[PathBuf]) -> Result<Vec<FilterGrid>> {
    paths
        .iter()
        .map(|p| load_filter(p).with_context(|| format!("reading base filter {}", p.display())))
        .collect()
}

/// Flag checks that need no file access, so usage errors never depend on I/O.
fn validate_gen(a: &GenArgs) -> CmdResult {
    let n = a.group.rotation_order();
    let dihedral = a.group.is_dihedral();
    if a.kind == KindArg::Irrep2reg {
        let k = a.k.ok_or_else(|| usage("--kind irrep2reg requires --k"))?;
        let j = a.j.unwrap_or(0);
        if k > n / 2 || j > 1 || (j == 1 && !dihedral) {
            return Err(usage(format!(
                "irrep (j={j}, k={k}) does not exist for {}",
                a.group
            )));
        }
    } else if a.j.is_some() || a.k.is_some() {
        return Err(usage("--j and --k only apply to --kind irrep2reg"));
    }
    if a.kind == KindArg::Orn && dihedral {
        return Err(usage("--kind orn is only defined for cyclic groups"));
    }
    if a.conjugate && (dihedral || a.kind != KindArg::Irrep2reg) {
        return Err(usage(
            "--conjugate only applies to irrep2reg on a cyclic group",
        ));
    }
    let expected = match a.kind {
        KindArg::Reg2reg if dihedral => 2 * (n / 2 + 1),
        KindArg::Reg2reg => n / 2 + 1,
        _ => 1,
    };
    if a.base.len() != expected {
        return Err(usage(format!(
            "--kind {} on {} needs {expected} base filter(s), got {}",
            kind_name(a.kind),
            a.group,
            a.base.len()
        )));
    }
    Ok(())
}

fn build_kernel(a: &GenArgs, bases: &[FilterGrid]) -> filtra::Result<SteerableKernel> {
    let n = a.group.rotation_order();
    let dihedral = a.group.is_dihedral();
    let base = &bases[0];
    Ok(match a.kind {
        KindArg::Triv2reg if dihedral => kernel_triv_to_reg_dn(base, n, a.mode)?,
        KindArg::Triv2reg => kernel_triv_to_reg_cn(base, n, a.mode)?,
        KindArg::Irrep2reg => {
            let (j, k) = (a.j.unwrap_or(0), a.k.unwrap_or(0));
            if dihedral {
                kernel_irrep_to_reg_dn(base, n, j, k, a.mode)?
            } else {
                kernel_irrep_to_reg_cn(base, n, k, a.mode, a.conjugate)?
            }
        }
        KindArg::Reg2reg if dihedral => kernel_reg_to_reg_dn(bases, n, a.mode)?,
        KindArg::Reg2reg => kernel_reg_to_reg_cn(bases, n, a.mode)?,
        KindArg::Orn => kernel_orn(base, n, a.mode)?,
    })
}

fn kind_name(k: KindArg) -> &'static str {
    match k {
        KindArg::Triv2reg => "triv2reg",
        KindArg::Irrep2reg => "irrep2reg",
        KindArg::Reg2reg => "reg2reg",
        KindArg::Orn => "orn",
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn gen(a: GenArgs) -> CmdResult {
    validate_gen(&a)?;
    let bases = load_bases(&a.base)?;
    let kernel = build_kernel(&a, &bases)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let grids = kernel.grids();
    for r in 0..grids.rows() {
        for c in 0..grids.cols() {
            let f = grids.get(r, c);
            write_file(&a.out.join(format!("r{r}_c{c}.csv")), &filter_to_csv(f))?;
            if a.format == GenFormat::Pgm {
                write_file(&a.out.join(format!("r{r}_c{c}.pgm")), &filter_to_pgm(f))?;
            }
        }
    }
    println!(
        "wrote {}x{} grids of {} to {}",
        grids.rows(),
        grids.cols(),
        kernel.label(),
        a.out.display()
    );
    Ok(())
}

fn parse_element(
    group: GroupSpec,
    text: &str,
) -> std::result::Result<filtra::group::GroupElement, Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [i0, i1] = parts.as_slice() else {
        return Err(usage(format!("--element expects i0,i1, got {text:?}")));
    };
    let (Ok(i0), Ok(i1)) = (i0.parse(), i1.parse()) else {
        return Err(usage(format!(
            "--element expects two non-negative integers, got {text:?}"
        )));
    };
    group.element(i0, i1).map_err(|e| usage(e.to_string()))
}

fn format_text(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:>9.5}", m[(r, c)]))
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

fn decompose(a: DecomposeArgs) -> CmdResult {
    let g = parse_element(a.group, &a.element)?;
    let rho = rho_regular(&g);
    let (basis, d) = decompose_regular(&g);
    let rebuilt = basis.matrix() * &d * basis.inverse();
    let residual = (&rebuilt - &rho).amax();
    let basis_name = if a.group.is_dihedral() { "W" } else { "V" };
    let sections = [
        ("rho_regular", &rho),
        (basis_name, basis.matrix()),
        ("D", &d),
    ];
    let mut out = String::new();
    match a.format {
        MatrixFormat::Text => {
            out.push_str(&format!("group {} element {g}\n", a.group));
            for (name, m) in sections {
                out.push_str(&format!(
                    "\n{name} ({}x{}):\n{}",
                    m.nrows(),
                    m.ncols(),
                    format_text(m)
                ));
            }
            out.push_str(&format!("\nreconstruction residual: {residual:.3e}\n"));
        }
        MatrixFormat::Csv => {
            for (name, m) in sections {
                out.push_str(&format!(
                    "matrix={name},rows={},cols={}\n",
                    m.nrows(),
                    m.ncols()
                ));
                out.push_str(&matrix_to_csv(m));
            }
            out.push_str(&format!("residual={residual:.16e}\n"));
        }
    }
    print!("{out}");
    Ok(())
}

fn capacity(a: CapacityArgs) -> CmdResult {
    if a.group.is_dihedral() {
        return Err(usage(
            "capacity compares cyclic constructions; use --group c<N>",
        ));
    }
    if a.size.is_multiple_of(2) {
        return Err(usage("--size must be odd"));
    }
    for kind in [CapacityKind::FiltraRegReg, CapacityKind::OrnRegReg] {
        let r = capacity_report(a.group.rotation_order(), a.size, kind);
        println!(
            "{},{},{}",
            r.kernel_kind, r.independent_weights, r.stored_filter_scalars
        );
    }
    Ok(())
}

fn demo(a: DemoArgs) -> CmdResult {
    let n = a.group.rotation_order();
    if a.k > n / 2 || a.j > 1 {
        return Err(usage(format!(
            "irrep (j={}, k={}) does not exist for N={n}",
            a.j, a.k
        )));
    }
    let base = load_filter(&a.base)
        .with_context(|| format!("reading base filter {}", a.base.display()))?;
    let mode = a.mode;
    let row = |entries: Vec<FilterGrid>| FilterMatrix::new(1, entries.len(), entries);
    let dumps: [(&str, FilterMatrix); 6] = [
        ("K", row(build_stack_k(&base, n, mode)?.into_entries())?),
        (
            "Kbar",
            row(build_stack_kbar(&base, n, mode)?.into_entries())?,
        ),
        (
            "cn_triv2reg",
            kernel_triv_to_reg_cn(&base, n, mode)?.grids().transpose(),
        ),
        (
            "dn_triv2reg",
            kernel_triv_to_reg_dn(&base, n, mode)?.grids().transpose(),
        ),
        (
            "cn_irrep2reg",
            kernel_irrep_to_reg_cn(&base, n, a.k, mode, false)?
                .grids()
                .transpose(),
        ),
        (
            "dn_irrep2reg",
            kernel_irrep_to_reg_dn(&base, n, a.j, a.k, mode)?
                .grids()
                .transpose(),
        ),
    ];
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for (name, m) in &dumps {
        write_file(&a.out.join(format!("{name}.pgm")), &filter_matrix_to_pgm(m))?;
    }
    println!("wrote {} montages to {}", dumps.len(), a.out.display());
    Ok(())
}
