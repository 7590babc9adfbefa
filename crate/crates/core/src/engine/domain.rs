/// Multi-label public suffixes under which registrations happen one level
/// deeper (`china.com.cn`, not `com.cn`).
pub const DEFAULT_PUBLIC_SUFFIXES: &[&str] = &[
    "com.cn", "net.cn", "org.cn", "gov.cn", "edu.cn", "ac.cn", "mil.cn", "com.hk", "org.hk",
    "net.hk", "gov.hk", "edu.hk", "com.tw", "org.tw", "net.tw", "gov.tw", "edu.tw", "co.uk",
    "org.uk", "ac.uk", "co.jp", "ne.jp", "or.jp", "com.au", "net.au", "org.au",
];

pub fn default_public_suffixes() -> Vec<String> {
    DEFAULT_PUBLIC_SUFFIXES
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Registrable (site-level) domain of `host`: the last two labels, or three
/// when the last two form a listed public suffix. IP literals are returned as is.
pub fn registrable_domain(host: &str, public_suffixes: &[String]) -> Option<String> {
    let host = host.trim().trim_end_matches('.').to_ascii_lowercase();
    if host.is_empty() {
        return None;
    }
    if host.parse::<std::net::IpAddr>().is_ok() || host.starts_with('[') {
        return Some(host);
    }
    let labels: Vec<&str> = host.split('.').collect();
    if labels.iter().any(|l| l.is_empty()) {
        return None;
    }
    if labels.len() <= 2 {
        return Some(host);
    }
    let last_two = labels[labels.len() - 2..].join(".");
    let keep = if public_suffixes
        .iter()
        .any(|s| s.eq_ignore_ascii_case(&last_two))
    {
        3
    } else {
        2
    };
    Some(labels[labels.len() - keep..].join("."))
}

/// Registrable domain of an absolute URL.
pub fn domain_of_url(url: &str, public_suffixes: &[String]) -> Option<String> {
    let parsed = url::Url::parse(url).ok()?;
    registrable_domain(parsed.host_str()?, public_suffixes)
}
