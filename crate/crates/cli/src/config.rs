use std::path::Path;

use anyhow::{bail, Context, Result};
use svyknn::harness::{Preset, StudyConfig, StudyId};

/// Preset defaults, then keys from the config file, then flags.
pub fn resolve(
    study: StudyId,
    preset_flag: Option<Preset>,
    file: Option<&Path>,
    apply_flags: impl FnOnce(&mut StudyConfig),
) -> Result<StudyConfig> {
    let overrides = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            toml::from_str::<toml::Table>(&text)
                .with_context(|| format!("parsing config file {}", path.display()))?
        }
        None => toml::Table::new(),
    };
    if let Some(v) = overrides.get("study") {
        let named: StudyId = v
            .clone()
            .try_into()
            .with_context(|| format!("`study` in the config file: {v}"))?;
        if named != study {
            bail!("config file is for the {named} study, but `study {study}` was requested");
        }
    }
    let preset = match (preset_flag, overrides.get("preset")) {
        (Some(p), _) => p,
        (None, Some(v)) => v
            .clone()
            .try_into()
            .with_context(|| format!("`preset` in the config file: {v}"))?,
        (None, None) => Preset::Desk,
    };
    let mut table = toml::Table::try_from(StudyConfig::preset(study, preset))
        .context("serializing the preset configuration")?;
    for (key, value) in overrides {
        table.insert(key, value);
    }
    table.insert("preset".into(), toml::Value::try_from(preset)?);
    let mut config: StudyConfig = table.try_into().context("invalid config file")?;
    apply_flags(&mut config);
    config.validate()?;
    Ok(config)
}
