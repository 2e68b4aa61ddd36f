use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sphfilt::filtering::{
    apply, axisym_transfer, butterfly_filter, cascade, fir_transfer, five_point_lowpass,
    read_taps, rotation_transfer, three_point_filter, transfer_norms, ButterflyParams,
    Orientation, TransferFunction,
};
use sphfilt::spectrum::{
    delta_spectrum, dof_counts, fisher_von_mises_spectrum, magnitude_only_spectrum, phase_swap,
    Spectrum,
};
use sphfilt::spharm::{
    bumpy_sphere, random_real_spectrum, spharm_analyze, spharm_filter, spharm_mesh,
    SurfaceSamples,
};
use sphfilt::sphere::{EulerAngles, GridScheme, Rotation, SphereGrid};
use sphfilt::transform::{
    analyze, heat_kernel_window, render_field, synthesize, AnalysisMethod, GrayImage,
    SampledField,
};
use sphfilt::Complex64;

use crate::{
    verify, Axis, Command, FilterArgs, FilterName, GridArgs, Method, PhaseTool, Scheme,
    ValidationFailed, DEFAULT_BANDWIDTH,
};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Analyze {
            input,
            bandwidth,
            method,
            irf_sigma,
            output,
        } => {
            check_input(&input)?;
            check_output(&output)?;
            let field = read_field(&input)?;
            let l = bandwidth.unwrap_or(DEFAULT_BANDWIDTH);
            let s = analyze(&field, l, &analysis_method(method, irf_sigma, l)?)?;
            write_with(&output, |w| s.write_to(w))
        }
        Command::Synthesize { input, grid, output } => {
            check_input(&input)?;
            check_output(&output)?;
            let s = read_spectrum(&input)?;
            let g = make_grid(&grid, s.bandwidth())?;
            write_with(&output, |w| synthesize(&s, &g).write_to(w))
        }
        Command::Filter {
            input,
            filter,
            bandwidth,
            output,
            field,
            transfer,
        } => {
            check_input(&input)?;
            for p in [Some(&output), field.as_ref(), transfer.as_ref()].into_iter().flatten() {
                check_output(p)?;
            }
            let s = read_spectrum(&input)?;
            if let Some(l) = bandwidth {
                if l != s.bandwidth() {
                    return Err(sphfilt::SphError::BandwidthMismatch {
                        left: l,
                        right: s.bandwidth(),
                    }
                    .into());
                }
            }
            let h = build_filter(&filter, s.bandwidth())?;
            let g = apply(&h, &s);
            write_with(&output, |w| g.write_to(w))?;
            if let Some(p) = field {
                let grid = make_grid(&default_grid(), g.bandwidth())?;
                write_with(&p, |w| synthesize(&g, &grid).write_to(w))?;
            }
            if let Some(p) = transfer {
                write_with(&p, |w| h.write_to(w))?;
            }
            Ok(())
        }
        Command::Impulse {
            filter,
            bandwidth,
            grid,
            output,
        } => {
            check_output(&output)?;
            let l = bandwidth.unwrap_or(DEFAULT_BANDWIDTH);
            let h = build_filter(&filter, l)?;
            let g = make_grid(&grid, l)?;
            let imp = synthesize(&apply(&h, &delta_spectrum(l)), &g);
            write_with(&output, |w| imp.write_to(w))
        }
        Command::Freqresp {
            filter,
            bandwidth,
            normalize_delta,
            output,
        } => {
            if let Some(p) = &output {
                check_output(p)?;
            }
            let l = bandwidth.unwrap_or(DEFAULT_BANDWIDTH);
            let h = build_filter(&filter, l)?;
            let delta = delta_spectrum(l);
            let norms = transfer_norms(&h, normalize_delta.then_some(&delta))?;
            let write = |w: &mut dyn Write| -> io::Result<()> {
                writeln!(w, "l,norm")?;
                for (l, n) in norms.iter().enumerate() {
                    writeln!(w, "{l},{n:.16e}")?;
                }
                Ok(())
            };
            match output {
                Some(p) => {
                    let mut w = BufWriter::new(create(&p)?);
                    write(&mut w)?;
                    w.flush()?;
                }
                None => write(&mut io::stdout().lock())?,
            }
            Ok(())
        }
        Command::Rotate {
            input,
            alpha,
            beta,
            gamma,
            output,
        } => {
            check_input(&input)?;
            check_output(&output)?;
            let s = read_spectrum(&input)?;
            let r = Rotation::from_euler(&EulerAngles::new(alpha, beta, gamma)?);
            let g = apply(&rotation_transfer(&r, s.bandwidth()), &s);
            write_with(&output, |w| g.write_to(w))
        }
        Command::Phase { tool } => phase(tool),
        Command::Spharm {
            input,
            filter,
            bandwidth,
            method,
            passes,
            seed,
            output,
            coords,
        } => {
            if let Some(p) = &input {
                check_input(p)?;
            }
            check_output(&output)?;
            if let Some(p) = &coords {
                check_output(p)?;
            }
            if passes == 0 {
                bail!("--passes must be at least 1");
            }
            let l = bandwidth.unwrap_or(DEFAULT_BANDWIDTH);
            let surface = match &input {
                Some(p) => SurfaceSamples::read_from(reader(p)?)?,
                None => {
                    let grid = SphereGrid::gauss_legendre(l + 1, 2 * l + 2)?;
                    bumpy_sphere(&grid, l.min(16), 0.2, seed)
                }
            };
            let grid = surface.grid().clone();
            let s = spharm_analyze(&surface, l, &analysis_method(method, 0.0, l)?)?;
            let h = build_filter(&filter, l)?;
            let mut total = h.clone();
            for _ in 1..passes {
                total = cascade(&total, &h)?;
            }
            let filtered = spharm_filter(&s, &total)?;
            let smoothed = sphfilt::spharm::spharm_synthesize(&filtered, &grid);
            if smoothed.is_degenerate() {
                eprintln!("warning: filtered surface is degenerate (all points at the origin)");
            }
            let mesh = spharm_mesh(&filtered, &grid);
            println!(
                "radial variance {:.6e} -> {:.6e}, mesh area {:.6e}",
                surface.radial_variance(),
                smoothed.radial_variance(),
                mesh.area()
            );
            write_with(&output, |w| mesh.write_obj(w))?;
            if let Some(p) = coords {
                write_with(&p, |w| smoothed.write_to(w))?;
            }
            Ok(())
        }
        Command::Render {
            input,
            range,
            output,
        } => {
            check_input(&input)?;
            check_output(&output)?;
            let field = read_field(&input)?;
            let r = render_field(&field, range);
            if r.degenerate {
                eprintln!("warning: field is constant; writing uniform mid-gray");
            }
            write_with(&output, |w| r.image.write_pgm(w))
        }
        Command::Verify { level, seed } => verify::run(level, seed),
    }
}

fn phase(tool: PhaseTool) -> Result<()> {
    match tool {
        PhaseTool::Magonly {
            input,
            bandwidth,
            seed,
            output,
            field,
        } => {
            if let Some(p) = &input {
                check_input(p)?;
            }
            check_output(&output)?;
            if let Some(p) = &field {
                check_output(p)?;
            }
            let s = match &input {
                Some(p) => read_spectrum(p)?,
                None => random_real_spectrum(bandwidth.unwrap_or(DEFAULT_BANDWIDTH), 0.0, seed),
            };
            let m = magnitude_only_spectrum(&s);
            let l = m.bandwidth().max(1);
            let grid = SphereGrid::gauss_legendre(l + 1, 2 * l + 1)?;
            let g = synthesize(&m, &grid);
            let re = g.real_parts();
            let lo = re.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = re.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let variation = g.alpha_variation();
            let (beta, _) = grid.node(g.argmax_real());
            println!(
                "alpha variation {variation:.3e} of range {:.3e}; maximum at beta {beta:.6}",
                hi - lo
            );
            write_with(&output, |w| m.write_to(w))?;
            if let Some(p) = field {
                write_with(&p, |w| g.write_to(w))?;
            }
            if variation > 1e-8 * (hi - lo) {
                return Err(ValidationFailed(format!("magnitude-only field varies in alpha by {variation:.3e}")).into());
            }
            Ok(())
        }
        PhaseTool::Swap {
            magnitude,
            phase,
            output,
        } => {
            check_input(&magnitude)?;
            check_input(&phase)?;
            check_output(&output)?;
            let f = read_spectrum(&magnitude)?;
            let g = read_spectrum(&phase)?;
            let s = phase_swap(&f, &g)?;
            write_with(&output, |w| s.write_to(w))
        }
        PhaseTool::Dof {
            max_degree,
            complex,
        } => {
            let d = dof_counts(max_degree, !complex);
            println!("max_degree,total,magnitude,phase,phase_percent");
            println!(
                "{},{},{},{},{:.4}",
                d.max_degree, d.total, d.magnitude_constrained, d.phase_constrained, d.percent()
            );
            Ok(())
        }
    }
}

fn analysis_method(method: Method, irf_sigma: f64, bandwidth: usize) -> Result<AnalysisMethod> {
    Ok(match method {
        Method::Quadrature => AnalysisMethod::Quadrature,
        Method::Irf if irf_sigma == 0.0 => AnalysisMethod::Irf { window: None },
        Method::Irf if irf_sigma > 0.0 => AnalysisMethod::Irf {
            window: Some(heat_kernel_window(bandwidth, irf_sigma)),
        },
        Method::Irf => bail!("--irf-sigma must be non-negative, got {irf_sigma}"),
    })
}

pub fn build_filter(f: &FilterArgs, bandwidth: usize) -> Result<TransferFunction> {
    if f.taps.is_some() && f.name != FilterName::Custom {
        bail!("--taps is only used with --filter custom");
    }
    let h = match f.name {
        FilterName::Identity => TransferFunction::identity(bandwidth),
        FilterName::Fivept => five_point_lowpass(bandwidth)?,
        FilterName::Threept => three_point_filter(f.beta0, bandwidth)?,
        FilterName::Butterfly => butterfly_filter(
            &ButterflyParams {
                sigma: f.sigma,
                lambda: f.lambda,
                orientation: match f.orientation {
                    Axis::X => Orientation::X,
                    Axis::Y => Orientation::Y,
                },
                ..ButterflyParams::default()
            },
            bandwidth,
        )?,
        FilterName::AxisymFvm => {
            let s = fisher_von_mises_spectrum(f.kappa, bandwidth)?;
            let h0: Vec<Complex64> = (0..bandwidth).map(|l| s.get(l, 0)).collect();
            axisym_transfer(&h0, bandwidth)?
        }
        FilterName::Custom => {
            let Some(p) = &f.taps else {
                bail!("--filter custom needs --taps <file>");
            };
            check_input(p)?;
            fir_transfer(&read_taps(reader(p)?)?, bandwidth)?
        }
    };
    Ok(h)
}

fn default_grid() -> GridArgs {
    GridArgs {
        scheme: Scheme::Equiangular,
        n_beta: None,
        n_alpha: None,
    }
}

fn make_grid(g: &GridArgs, bandwidth: usize) -> Result<SphereGrid> {
    let nb = g.n_beta.unwrap_or(2 * bandwidth + 2);
    let na = g.n_alpha.unwrap_or(2 * nb);
    let scheme = match g.scheme {
        Scheme::Equiangular => GridScheme::Equiangular,
        Scheme::GaussLegendre => GridScheme::GaussLegendre,
    };
    Ok(SphereGrid::new(scheme, nb, na)?)
}

fn check_input(p: &Path) -> Result<()> {
    if !p.is_file() {
        bail!("cannot read {}", p.display());
    }
    Ok(())
}

fn check_output(p: &Path) -> Result<()> {
    let dir = match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    if !dir.is_dir() {
        bail!("output directory {} does not exist", dir.display());
    }
    Ok(())
}

fn reader(p: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?))
}

fn create(p: &Path) -> Result<File> {
    File::create(p).with_context(|| format!("creating {}", p.display()))
}

fn write_with<F>(p: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> sphfilt::Result<()>,
{
    let mut w = BufWriter::new(create(p)?);
    f(&mut w).with_context(|| format!("writing {}", p.display()))?;
    w.flush()?;
    Ok(())
}

fn read_spectrum(p: &Path) -> Result<Spectrum> {
    Spectrum::read_from(reader(p)?).with_context(|| format!("reading {}", p.display()))
}

/// A field file, or a PGM raster mapped to the equiangular grid.
fn read_field(p: &Path) -> Result<SampledField> {
    let mut r = reader(p)?;
    let head = r.fill_buf()?;
    if head.starts_with(b"P5") || head.starts_with(b"P2") {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let img = GrayImage::read_pgm(bytes.as_slice()).with_context(|| format!("reading {}", p.display()))?;
        return Ok(img.to_field()?);
    }
    SampledField::read_from(r).with_context(|| format!("reading {}", p.display()))
}
