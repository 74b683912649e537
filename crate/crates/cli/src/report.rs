//! Reports are TOML documents whose sections keep insertion order.

use toml::{Table, Value};

#[derive(Debug, Default)]
pub struct Report {
    root: Table,
}

impl Report {
    pub fn new(command: &str, stamp: bool) -> Self {
        let mut r = Report::default();
        let tool = r.section("tool");
        tool.insert("name".into(), "tmsv".into());
        tool.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        tool.insert("command".into(), command.into());
        if stamp {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            tool.insert("unix_time".into(), Value::Integer(secs as i64));
        }
        r
    }

    /// Section by dotted path, created on first use.
    pub fn section(&mut self, path: &str) -> &mut Table {
        let mut table = &mut self.root;
        for key in path.split('.') {
            table = table
                .entry(key.to_string())
                .or_insert_with(|| Value::Table(Table::new()))
                .as_table_mut()
                .expect("report sections are tables");
        }
        table
    }

    pub fn set(&mut self, path: &str, key: &str, value: impl Into<Value>) {
        self.section(path).insert(key.to_string(), value.into());
    }

    pub fn set_opt(&mut self, path: &str, key: &str, value: Option<f64>) {
        if let Some(v) = value {
            self.set(path, key, v);
        }
    }

    pub fn render(&self) -> String {
        toml::to_string(&self.root).expect("report tables serialize")
    }
}

pub fn int(v: impl TryInto<i64>) -> Value {
    Value::Integer(v.try_into().unwrap_or(i64::MAX))
}

pub fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_keep_order_and_parse_back() {
        let mut r = Report::new("predict", false);
        r.set("inputs", "z", 0.5);
        r.set("witness", "det_m", -0.25);
        r.set("marginals.signal", "thermal_r2", 0.99);
        let text = r.render();
        assert!(text.find("[inputs]").unwrap() < text.find("[witness]").unwrap());
        let back: Table = text.parse().unwrap();
        assert_eq!(back["witness"]["det_m"].as_float(), Some(-0.25));
        assert!(!text.contains("unix_time"));
    }
}
