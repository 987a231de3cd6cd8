use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use anyhow::Context;
use sha2::{Digest, Sha256};
use sobench::tasks::{build_prompt, load_suite, Completion, Suite};

use crate::cli::GenerateArgs;
use crate::config::{apply, Config};
use crate::gateway::{GatewayClient, GatewayError, GenerateRequest};
use crate::manifest::RunManifest;

type SampleKey = (String, u64, u32);

fn key(task_id: &str, temperature: f64, index: u32) -> SampleKey {
    (task_id.to_owned(), temperature.to_bits(), index)
}

/// Reads completions already on disk. A torn final line left by an
/// interrupted run is cut off so appends start on a clean line.
fn load_existing(path: &Path) -> anyhow::Result<HashSet<SampleKey>> {
    let mut done = HashSet::new();
    let Ok(text) = fs::read_to_string(path) else { return Ok(done) };
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    if complete.len() != text.len() {
        log::warn!("dropping a partial trailing line from {}", path.display());
        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len(complete.len() as u64)?;
    }
    for (i, line) in complete.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let c: Completion =
            serde_json::from_str(line).with_context(|| format!("{}:{}: invalid completion", path.display(), i + 1))?;
        done.insert(key(&c.task_id, c.temperature, c.sample_index));
    }
    Ok(done)
}

/// Per-request seed derived from the run seed and the first sample it covers.
fn request_seed(seed: u64, task_id: &str, temperature: f64, first_index: u32) -> u64 {
    let digest = Sha256::digest(format!("{seed}:{task_id}:{temperature}:{first_index}").as_bytes());
    u64::from(u32::from_le_bytes([digest[0], digest[1], digest[2], digest[3]]))
}

/// Splits sorted indices into runs of consecutive values, each at most `max` long.
fn batches(indices: &[u32], max: usize) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = Vec::new();
    for &i in indices {
        match out.last_mut() {
            Some(last) if last.len() < max && last.last() == Some(&(i - 1)) => last.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

fn generate_with_retries(
    client: &GatewayClient,
    request: &GenerateRequest,
    retries: u32,
) -> Result<Vec<String>, GatewayError> {
    let mut attempt = 0;
    loop {
        match client.generate(request) {
            Ok(texts) => return Ok(texts),
            Err(err) if attempt >= retries => return Err(err),
            Err(err) => {
                attempt += 1;
                log::warn!("generate failed (attempt {attempt} of {}): {err}", retries + 1);
                thread::sleep(Duration::from_millis(100 * u64::from(attempt)));
            }
        }
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn run(args: GenerateArgs, mut config: Config, out: &mut dyn Write) -> anyhow::Result<()> {
    let g = &mut config.generation;
    apply(&mut g.gateway, args.gateway);
    apply(&mut g.temperatures, args.temperatures);
    apply(&mut g.samples, args.samples);
    apply(&mut g.top_p, args.top_p);
    apply(&mut g.max_new_tokens, args.max_new_tokens);
    apply(&mut g.batch_size, args.batch_size);
    apply(&mut g.retries, args.retries);
    if g.batch_size == 0 {
        anyhow::bail!("batch size must be at least 1");
    }
    let g = &config.generation;

    let suite_kind: Suite = args.suite.suite_kind.into();
    let suite = load_suite(&args.suite.suite, suite_kind)?;
    for w in &suite.warnings {
        log::warn!("{w}");
    }
    let preamble = match &args.preamble {
        Some(p) => Some(fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?),
        None => None,
    };
    let mut stops = suite_kind.default_stops();
    stops.extend(g.stop_sequences.iter().cloned());

    let client = GatewayClient::new(&g.gateway, Duration::from_secs_f64(g.request_timeout_s));
    let health = client.health().context("gateway health check failed")?;

    let mut manifest = RunManifest::start("generate", &config);
    manifest.add_input(&args.suite.suite)?;
    manifest.detail("model", &health.model);

    let done = load_existing(&args.out)?;
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&args.out)
        .with_context(|| format!("cannot open {}", args.out.display()))?;
    let mut writer = BufWriter::new(file);

    let (mut requests, mut written, mut failed) = (0u64, 0u64, 0u64);
    for task in &suite.tasks {
        let prompt = build_prompt(task, preamble.as_deref());
        for &temperature in &g.temperatures {
            let missing: Vec<u32> =
                (0..g.samples).filter(|&i| !done.contains(&key(&task.task_id, temperature, i))).collect();
            for batch in batches(&missing, g.batch_size as usize) {
                let request = GenerateRequest {
                    prompt: prompt.clone(),
                    n: batch.len() as u32,
                    temperature,
                    top_p: g.top_p,
                    max_new_tokens: g.max_new_tokens,
                    stop_sequences: stops.clone(),
                    seed: config.seed.map(|s| request_seed(s, &task.task_id, temperature, batch[0])),
                };
                requests += 1;
                let (texts, error) = match generate_with_retries(&client, &request, g.retries) {
                    Ok(texts) => (texts, None),
                    Err(err) => {
                        log::error!("{} at T={temperature}: {err}", task.task_id);
                        failed += batch.len() as u64;
                        (vec![String::new(); batch.len()], Some(err.to_string()))
                    }
                };
                for (&sample_index, text) in batch.iter().zip(texts) {
                    let completion = Completion {
                        task_id: task.task_id.clone(),
                        sample_index,
                        temperature,
                        top_p: g.top_p,
                        text,
                        error: error.clone(),
                    };
                    serde_json::to_writer(&mut writer, &completion)?;
                    writer.write_all(b"\n")?;
                    written += 1;
                }
                writer.flush().with_context(|| format!("writing {}", args.out.display()))?;
            }
        }
    }

    manifest.detail("requests", requests);
    manifest.detail("written", written);
    manifest.detail("failed", failed);
    manifest.detail("already_present", done.len());
    manifest.finish(&manifest_path(&args.out))?;
    writeln!(
        out,
        "{written} completions written ({failed} failed, {} already present) in {requests} requests -> {}",
        done.len(),
        args.out.display()
    )?;
    Ok(())
}
