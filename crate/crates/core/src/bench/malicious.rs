use crate::logic::{PredicateTable, Value};

/// Header rules for the `isMalicious` predicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaliciousRules {
    /// Any header containing one of these is malicious.
    pub substrings: Vec<String>,
    /// User agents (matched case-insensitively inside a `User-Agent` header).
    pub agent_blacklist: Vec<String>,
}

impl Default for MaliciousRules {
    fn default() -> Self {
        MaliciousRules {
            substrings: vec!["../".into()],
            agent_blacklist: vec!["sqlmap".into(), "nikto".into(), "dirbuster".into()],
        }
    }
}

impl MaliciousRules {
    pub fn none() -> Self {
        MaliciousRules { substrings: Vec::new(), agent_blacklist: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.substrings.is_empty() && self.agent_blacklist.is_empty()
    }

    fn header_triggers(&self, h: &str) -> bool {
        if self.substrings.iter().any(|s| h.contains(s.as_str())) {
            return true;
        }
        let Some((name, value)) = h.split_once(':') else { return false };
        if !name.trim().eq_ignore_ascii_case("user-agent") {
            return false;
        }
        let value = value.to_ascii_lowercase();
        self.agent_blacklist.iter().any(|a| value.contains(&a.to_ascii_lowercase()))
    }
}

/// True iff some header triggers some rule.
pub fn is_malicious<S: AsRef<str>>(headers: &[S], rules: &MaliciousRules) -> bool {
    headers.iter().any(|h| rules.header_triggers(h.as_ref()))
}

fn header_text(v: &Value) -> String {
    match v {
        Value::Str(s) => s.to_string(),
        other => other.to_string(),
    }
}

/// Registers `isMalicious` over header values.
pub fn register_is_malicious(table: &mut PredicateTable, rules: MaliciousRules) {
    table.register("isMalicious", move |args| {
        let hs: Vec<String> = args.iter().map(header_text).collect();
        is_malicious(&hs, &rules)
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    const BENIGN: [&str; 6] = [
        "Host: localhost",
        "User-Agent: curl/8.0",
        "Accept: */*",
        "Accept-Language: en",
        "Connection: keep-alive",
        "Cache-Control: no-cache",
    ];

    #[test]
    fn default_rules() {
        let r = MaliciousRules::default();
        assert!(!is_malicious(&BENIGN, &r));
        let mut h = BENIGN;
        h[2] = "GET /../etc/passwd";
        assert!(is_malicious(&h, &r));
        let mut h = BENIGN;
        h[1] = "user-agent: SQLMap/1.7";
        assert!(is_malicious(&h, &r));
        // A blacklisted agent name outside the user-agent header is fine.
        let mut h = BENIGN;
        h[0] = "Host: nikto.example";
        assert!(!is_malicious(&h, &r));
        assert!(!is_malicious(&[""; 6], &r));
    }

    #[test]
    fn empty_rules_never_fire() {
        assert!(!is_malicious(&["GET /../etc/passwd"; 6], &MaliciousRules::none()));
    }

    #[test]
    fn registered_predicate_reads_strings() {
        let mut t = PredicateTable::new();
        register_is_malicious(&mut t, MaliciousRules::default());
        let f = t.get("isMalicious").unwrap();
        let mut args: Vec<Value> = BENIGN.iter().map(|h| Value::string(h)).collect();
        assert!(!f(&args));
        args[5] = Value::string("Referer: /a/../../b");
        assert!(f(&args));
    }
}
