#include "mediation/model_io.hpp"

#include <cctype>
#include <json.hpp>

namespace mediation {

namespace {

using nlohmann::json;

std::string escape_token(std::string_view key) {
  std::string out;
  for (char c : key) {
    if (c == '~')
      out += "~0";
    else if (c == '/')
      out += "~1";
    else
      out += c;
  }
  return out;
}

// Single pass over well-formed JSON text recording where each value starts.
class Scanner {
 public:
  Scanner(std::string_view text, std::map<std::string, SourceLocation>& out,
          std::vector<SourceMap::Duplicate>& dups)
      : text_(text), out_(out), dups_(dups) {}

  void run() {
    skip_ws();
    value("");
  }

 private:
  SourceLocation here() const { return {line_, col_}; }

  void advance() {
    if (pos_ >= text_.size()) return;
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(text_[pos_]) & 0xC0) != 0x80) {
      ++col_;
    }
    ++pos_;
    // Continuation bytes never start a column.
    while (pos_ < text_.size() &&
           (static_cast<unsigned char>(text_[pos_]) & 0xC0) == 0x80)
      ++pos_;
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(peek())))
      advance();
  }

  std::string string_token() {
    std::string out;
    advance();  // opening quote
    while (pos_ < text_.size() && peek() != '"') {
      if (peek() == '\\') {
        advance();
        switch (peek()) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case 'b': out += '\b'; break;
          case 'f': out += '\f'; break;
          case 'u': out += "\\u"; break;
          default: out += peek();
        }
        advance();
        continue;
      }
      const std::size_t start = pos_;
      advance();
      out.append(text_.substr(start, pos_ - start));
    }
    advance();  // closing quote
    return out;
  }

  void value(const std::string& pointer) {
    out_.emplace(pointer, here());
    const char c = peek();
    if (c == '{') {
      advance();
      skip_ws();
      std::map<std::string, SourceLocation> seen;
      while (peek() != '}' && pos_ < text_.size()) {
        const SourceLocation key_at = here();
        const std::string key = string_token();
        const std::string child = pointer + "/" + escape_token(key);
        if (auto it = seen.find(key); it != seen.end())
          dups_.push_back({child, it->second, key_at});
        else
          seen.emplace(key, key_at);
        skip_ws();
        advance();  // colon
        skip_ws();
        value(child);
        skip_ws();
        if (peek() == ',') {
          advance();
          skip_ws();
        }
      }
      advance();
    } else if (c == '[') {
      advance();
      skip_ws();
      std::size_t index = 0;
      while (peek() != ']' && pos_ < text_.size()) {
        value(pointer + "/" + std::to_string(index++));
        skip_ws();
        if (peek() == ',') {
          advance();
          skip_ws();
        }
      }
      advance();
    } else if (c == '"') {
      string_token();
    } else {
      while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(peek())) &&
             peek() != ',' && peek() != '}' && peek() != ']')
        advance();
    }
  }

  std::string_view text_;
  std::map<std::string, SourceLocation>& out_;
  std::vector<SourceMap::Duplicate>& dups_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

SourceLocation location_of_byte(std::string_view text, std::size_t byte) {
  SourceLocation loc;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++loc.line;
      loc.column = 1;
    } else if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
      ++loc.column;
    }
  }
  return loc;
}

// Structural reading of the JSON tree into a ModelSpec; validate() does the
// semantic part.
class Reader {
 public:
  Reader(const SourceMap& map, std::vector<Diagnostic>& out)
      : map_(map), out_(out) {}

  void error(const std::string& pointer, const std::string& message) {
    out_.push_back({map_.locate(pointer), pointer, message, std::nullopt});
  }

  bool only_keys(const json& obj, const std::string& pointer,
                 std::initializer_list<const char*> allowed) {
    bool ok = true;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool known = false;
      for (const char* a : allowed) known = known || it.key() == a;
      if (!known) {
        error(pointer + "/" + escape_token(it.key()),
              "unknown key '" + it.key() + "'");
        ok = false;
      }
    }
    return ok;
  }

  const json* member(const json& obj, const std::string& pointer,
                     const char* key, bool required) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) error(pointer, std::string("missing required key '") + key + "'");
      return nullptr;
    }
    return &*it;
  }

  std::optional<std::string> string(const json& j, const std::string& pointer) {
    if (!j.is_string()) {
      error(pointer, "expected a string");
      return std::nullopt;
    }
    return j.get<std::string>();
  }

  std::vector<std::string> strings(const json& j, const std::string& pointer) {
    std::vector<std::string> out;
    if (!j.is_array()) {
      error(pointer, "expected an array of strings");
      return out;
    }
    for (std::size_t i = 0; i < j.size(); ++i)
      if (auto s = string(j[i], pointer + "/" + std::to_string(i)))
        out.push_back(*s);
    return out;
  }

  std::map<std::string, double> numbers(const json& j, const std::string& pointer) {
    std::map<std::string, double> out;
    if (!j.is_object()) {
      error(pointer, "expected an object of numbers");
      return out;
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!it->is_number())
        error(pointer + "/" + escape_token(it.key()), "expected a number");
      else
        out[it.key()] = it->get<double>();
    }
    return out;
  }

  ExogenousSpec exogenous(const json& j, const std::string& pointer,
                          bool joint_form) {
    ExogenousSpec e;
    if (!j.is_object()) {
      error(pointer, "expected an object");
      return e;
    }
    if (joint_form)
      only_keys(j, pointer, {"name", "domain"});
    else
      only_keys(j, pointer, {"name", "domain", "marginal"});
    if (auto* n = member(j, pointer, "name", true))
      e.name = string(*n, pointer + "/name").value_or("");
    if (auto* d = member(j, pointer, "domain", true))
      e.domain = strings(*d, pointer + "/domain");
    if (!joint_form)
      if (auto* m = member(j, pointer, "marginal", true))
        e.marginal = numbers(*m, pointer + "/marginal");
    return e;
  }

  VariableSpec variable(const json& j, const std::string& pointer) {
    VariableSpec v;
    if (!j.is_object()) {
      error(pointer, "expected an object");
      return v;
    }
    only_keys(j, pointer, {"name", "domain", "numeric_code", "observable",
                           "parents", "exo_parents", "table"});
    if (auto* n = member(j, pointer, "name", true))
      v.name = string(*n, pointer + "/name").value_or("");
    if (auto* d = member(j, pointer, "domain", true))
      v.domain = strings(*d, pointer + "/domain");
    if (auto* c = member(j, pointer, "numeric_code", false))
      v.numeric_code = numbers(*c, pointer + "/numeric_code");
    if (auto* o = member(j, pointer, "observable", false)) {
      if (!o->is_boolean())
        error(pointer + "/observable", "expected true or false");
      else
        v.observable = o->get<bool>();
    }
    if (auto* p = member(j, pointer, "parents", false))
      v.parents = strings(*p, pointer + "/parents");
    if (auto* p = member(j, pointer, "exo_parents", false))
      v.exo_parents = strings(*p, pointer + "/exo_parents");
    if (auto* t = member(j, pointer, "table", true)) {
      if (!t->is_object()) {
        error(pointer + "/table", "expected an object mapping parent labels to outputs");
      } else {
        for (auto it = t->begin(); it != t->end(); ++it)
          if (auto s = string(*it, pointer + "/table/" + escape_token(it.key())))
            v.table[it.key()] = *s;
      }
    }
    return v;
  }

  ModelSpec model(const json& root) {
    ModelSpec spec;
    if (!root.is_object()) {
      error("", "model document must be a JSON object");
      return spec;
    }
    only_keys(root, "", {"name", "exogenous", "variables"});
    if (auto* n = member(root, "", "name", true))
      spec.name = string(*n, "/name").value_or("");
    if (auto* e = member(root, "", "exogenous", false)) {
      if (e->is_array()) {
        for (std::size_t i = 0; i < e->size(); ++i)
          spec.exogenous.push_back(
              exogenous((*e)[i], "/exogenous/" + std::to_string(i), false));
      } else if (e->is_object()) {
        only_keys(*e, "/exogenous", {"variables", "joint"});
        if (auto* vs = member(*e, "/exogenous", "variables", true)) {
          if (!vs->is_array())
            error("/exogenous/variables", "expected an array");
          else
            for (std::size_t i = 0; i < vs->size(); ++i)
              spec.exogenous.push_back(exogenous(
                  (*vs)[i], "/exogenous/variables/" + std::to_string(i), true));
        }
        if (auto* jt = member(*e, "/exogenous", "joint", true))
          spec.joint = numbers(*jt, "/exogenous/joint");
      } else {
        error("/exogenous",
              "expected an array of independent variables or an object with "
              "'variables' and 'joint'");
      }
    }
    if (auto* vs = member(root, "", "variables", true)) {
      if (!vs->is_array())
        error("/variables", "expected an array");
      else
        for (std::size_t i = 0; i < vs->size(); ++i)
          spec.variables.push_back(
              variable((*vs)[i], "/variables/" + std::to_string(i)));
    }
    return spec;
  }

 private:
  const SourceMap& map_;
  std::vector<Diagnostic>& out_;
};

std::string render_location(const SourceLocation& loc) {
  return std::to_string(loc.line) + ":" + std::to_string(loc.column);
}

std::string join_diagnostics(const std::vector<Diagnostic>& diagnostics) {
  std::string out;
  for (const auto& d : diagnostics) {
    if (!out.empty()) out += "\n";
    out += d.render();
  }
  return out;
}

}  // namespace

SourceMap SourceMap::build(std::string_view text) {
  SourceMap map;
  Scanner(text, map.locations_, map.duplicates_).run();
  return map;
}

std::optional<SourceLocation> SourceMap::find(const std::string& pointer) const {
  auto it = locations_.find(pointer);
  if (it == locations_.end()) return std::nullopt;
  return it->second;
}

SourceLocation SourceMap::locate(const std::string& pointer) const {
  std::string p = pointer;
  while (true) {
    if (auto loc = find(p)) return *loc;
    if (p.empty()) return {};
    p.erase(p.rfind('/'));
  }
}

std::string Diagnostic::render() const {
  std::string out = render_location(location) + ": " + message;
  if (related) out += " (see also " + render_location(*related) + ")";
  return out;
}

ModelError::ModelError(std::vector<Diagnostic> diagnostics)
    : ValidationError(join_diagnostics(diagnostics)),
      diagnostics_(std::move(diagnostics)) {}

ModelDocument parse_model(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::string what = e.what();
    auto colon = what.find(": ");
    auto msg = colon == std::string::npos ? what : what.substr(colon + 2);
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    throw ModelError({{location_of_byte(text, byte), "", msg, std::nullopt}});
  }

  ModelDocument doc;
  doc.text = std::string(text);
  doc.source_map = SourceMap::build(text);
  std::vector<Diagnostic> diagnostics;
  for (const auto& d : doc.source_map.duplicates()) {
    auto slash = d.pointer.rfind('/');
    diagnostics.push_back({d.second, d.pointer,
                           "duplicate key '" + d.pointer.substr(slash + 1) + "'",
                           d.first});
  }
  Reader reader(doc.source_map, diagnostics);
  doc.spec = reader.model(root);
  if (!diagnostics.empty()) throw ModelError(std::move(diagnostics));

  const ValidationReport report = validate(doc.spec);
  for (const auto& v : report.violations) {
    std::optional<SourceLocation> related;
    if (!v.related.empty()) related = doc.source_map.locate(v.related);
    diagnostics.push_back(
        {doc.source_map.locate(v.path), v.path, v.message, related});
  }
  if (!diagnostics.empty()) throw ModelError(std::move(diagnostics));
  doc.scm = std::make_shared<const Scm>(doc.spec);
  return doc;
}

std::string print_model(const ModelSpec& spec) {
  using ojson = nlohmann::ordered_json;
  ojson root;
  root["name"] = spec.name;
  auto exo_entry = [](const ExogenousSpec& e) {
    ojson j;
    j["name"] = e.name;
    j["domain"] = e.domain;
    if (e.marginal) {
      ojson m = ojson::object();
      for (const auto& label : e.domain)
        if (auto it = e.marginal->find(label); it != e.marginal->end())
          m[label] = it->second;
      for (const auto& [label, p] : *e.marginal)
        if (!m.contains(label)) m[label] = p;
      j["marginal"] = m;
    }
    return j;
  };
  if (spec.joint) {
    ojson vars = ojson::array();
    for (const auto& e : spec.exogenous) vars.push_back(exo_entry(e));
    ojson joint = ojson::object();
    for (const auto& [key, p] : *spec.joint) joint[key] = p;
    root["exogenous"] = {{"variables", vars}, {"joint", joint}};
  } else {
    ojson exo = ojson::array();
    for (const auto& e : spec.exogenous) exo.push_back(exo_entry(e));
    root["exogenous"] = exo;
  }
  ojson vars = ojson::array();
  for (const auto& v : spec.variables) {
    ojson j;
    j["name"] = v.name;
    j["domain"] = v.domain;
    if (v.numeric_code) {
      ojson c = ojson::object();
      for (const auto& [label, code] : *v.numeric_code) c[label] = code;
      j["numeric_code"] = c;
    }
    if (!v.observable) j["observable"] = false;
    if (!v.parents.empty()) j["parents"] = v.parents;
    if (!v.exo_parents.empty()) j["exo_parents"] = v.exo_parents;
    ojson table = ojson::object();
    for (const auto& [key, out] : v.table) table[key] = out;
    j["table"] = table;
    vars.push_back(j);
  }
  root["variables"] = vars;
  return root.dump(2) + "\n";
}

}  // namespace mediation
