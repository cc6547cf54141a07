//! Host cache and memory detection from Linux sysfs and procfs.

use std::fs;
use std::path::Path;

use magnus_core::SystemParams;

pub const FALLBACK_CACHE_LINE: usize = 64;
pub const FALLBACK_L2: usize = 1 << 20;
pub const FALLBACK_MEMORY_BUDGET: u64 = 1 << 30;

/// Detected parameters plus a note for every value that fell back to a
/// default.
#[derive(Clone, Debug)]
pub struct HostParams {
    pub sys: SystemParams,
    pub warnings: Vec<String>,
}

/// Parses sysfs cache sizes such as `2048K`, `1M` or `65536`.
pub fn parse_size(text: &str) -> Option<usize> {
    let t = text.trim();
    let (digits, mult) = match t.chars().last()? {
        'K' | 'k' => (&t[..t.len() - 1], 1usize << 10),
        'M' | 'm' => (&t[..t.len() - 1], 1 << 20),
        'G' | 'g' => (&t[..t.len() - 1], 1 << 30),
        _ => (t, 1),
    };
    digits.trim().parse::<usize>().ok()?.checked_mul(mult)
}

/// `MemTotal` from `/proc/meminfo`, in bytes.
pub fn parse_meminfo(text: &str) -> Option<u64> {
    let line = text.lines().find(|l| l.starts_with("MemTotal:"))?;
    let mut tok = line.split_whitespace().skip(1);
    let kb: u64 = tok.next()?.parse().ok()?;
    Some(kb * 1024)
}

/// `(line size, size)` of the first level-2 data or unified cache listed
/// under `cache_dir` (a `.../cpu0/cache` directory).
pub fn read_l2(cache_dir: &Path) -> Option<(Option<usize>, usize)> {
    let mut entries: Vec<_> = fs::read_dir(cache_dir).ok()?.flatten().map(|e| e.path()).collect();
    entries.sort();
    for dir in entries {
        let read = |f: &str| fs::read_to_string(dir.join(f)).ok();
        if read("level").map(|s| s.trim().to_owned()).as_deref() != Some("2") {
            continue;
        }
        let kind = read("type").unwrap_or_default();
        if !matches!(kind.trim(), "Unified" | "Data") {
            continue;
        }
        let size = parse_size(&read("size")?)?;
        let line = read("coherency_line_size").and_then(|s| s.trim().parse().ok());
        return Some((line, size));
    }
    None
}

/// Cache line and L2 from cpu0, memory budget as a quarter of physical
/// memory. Missing values fall back to 64-byte lines, 1 MiB L2 and a 1 GiB
/// budget.
pub fn detect_system_params() -> HostParams {
    detect_from(
        Path::new("/sys/devices/system/cpu/cpu0/cache"),
        Path::new("/proc/meminfo"),
    )
}

pub fn detect_from(cache_dir: &Path, meminfo: &Path) -> HostParams {
    let mut warnings = Vec::new();
    let mut sys = SystemParams::default();
    match read_l2(cache_dir) {
        Some((line, size)) => {
            sys.l2_bytes = size;
            match line {
                Some(l) if l.is_power_of_two() => sys.cache_line_bytes = l,
                _ => {
                    sys.cache_line_bytes = FALLBACK_CACHE_LINE;
                    warnings.push(format!("cache line size unknown, assuming {FALLBACK_CACHE_LINE} bytes"));
                }
            }
        }
        None => {
            sys.cache_line_bytes = FALLBACK_CACHE_LINE;
            sys.l2_bytes = FALLBACK_L2;
            warnings.push(format!(
                "L2 cache not found, assuming {FALLBACK_L2} bytes with {FALLBACK_CACHE_LINE}-byte lines"
            ));
        }
    }
    match fs::read_to_string(meminfo).ok().as_deref().and_then(parse_meminfo) {
        Some(total) => sys.memory_budget_bytes = (total / 4).max(1),
        None => {
            sys.memory_budget_bytes = FALLBACK_MEMORY_BUDGET;
            warnings.push(format!(
                "physical memory unknown, using a {FALLBACK_MEMORY_BUDGET}-byte coarse-level budget"
            ));
        }
    }
    HostParams { sys, warnings }
}
