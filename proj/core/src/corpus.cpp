#include "tdre/corpus.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace tdre {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// TypeInventory

namespace {
int find_in(const std::vector<std::string>& v, const std::string& t) {
  for (size_t i = 0; i < v.size(); ++i)
    if (v[i] == t) return static_cast<int>(i);
  return -1;
}

std::string lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}
}  // namespace

int TypeInventory::entity_id(const std::string& t) const { return find_in(entity_types, t); }
int TypeInventory::relation_id(const std::string& t) const { return find_in(relation_types, t); }

int TypeInventory::intern_entity(const std::string& t) {
  int id = entity_id(t);
  if (id >= 0) return id;
  entity_types.push_back(t);
  return static_cast<int>(entity_types.size()) - 1;
}

int TypeInventory::intern_relation(const std::string& t) {
  int id = relation_id(t);
  if (id >= 0) return id;
  relation_types.push_back(t);
  return static_cast<int>(relation_types.size()) - 1;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::build(const std::vector<Example>& examples, const TypeInventory& types,
                             const std::vector<std::string>& pretrained_words) {
  Vocabulary v;
  v.types_ = types;
  v.words_.push_back("<unk>");
  v.word_ids_["<unk>"] = kUnkWord;
  v.chars_.push_back(0);  // <pad>
  v.chars_.push_back(0);  // <unk>
  auto add_word = [&v](const std::string& w) {
    std::string lw = lower(w);
    if (!v.word_ids_.count(lw)) {
      v.word_ids_[lw] = static_cast<int>(v.words_.size());
      v.words_.push_back(lw);
    }
  };
  for (const auto& ex : examples) {
    for (const auto& tok : ex.tokens) {
      add_word(tok);
      for (char c : tok) {
        if (!v.char_ids_.count(c)) {
          v.char_ids_[c] = static_cast<int>(v.chars_.size());
          v.chars_.push_back(static_cast<unsigned char>(c));
        }
      }
    }
  }
  for (const auto& w : pretrained_words) add_word(w);
  return v;
}

int Vocabulary::word_id(const std::string& w) const {
  auto it = word_ids_.find(lower(w));
  return it == word_ids_.end() ? kUnkWord : it->second;
}

int Vocabulary::char_id(char c) const {
  auto it = char_ids_.find(c);
  return it == char_ids_.end() ? kUnkChar : it->second;
}

std::string Vocabulary::tag_name(int tag_id) const {
  if (tag_id == tag_o()) return "O";
  int t = (tag_id - 1) / 2;
  bool begin = ((tag_id - 1) % 2) == 0;
  return (begin ? "B-" : "I-") + types_.entity_types.at(static_cast<size_t>(t));
}

std::string Vocabulary::to_json() const {
  json j;
  j["words"] = words_;
  std::vector<int> ch;
  for (size_t i = 2; i < chars_.size(); ++i) ch.push_back(static_cast<int>(chars_[i]));
  j["chars"] = ch;
  j["entity_types"] = types_.entity_types;
  j["relation_types"] = types_.relation_types;
  // non-UTF8 bytes in words are sanitized rather than fatal
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

Vocabulary Vocabulary::from_json(const std::string& text) {
  json j = json::parse(text);
  Vocabulary v;
  v.words_ = j.at("words").get<std::vector<std::string>>();
  for (size_t i = 0; i < v.words_.size(); ++i) v.word_ids_[v.words_[i]] = static_cast<int>(i);
  v.chars_.push_back(0);
  v.chars_.push_back(0);
  for (int c : j.at("chars").get<std::vector<int>>()) {
    v.char_ids_[static_cast<char>(static_cast<unsigned char>(c))] =
        static_cast<int>(v.chars_.size());
    v.chars_.push_back(static_cast<unsigned char>(c));
  }
  v.types_.entity_types = j.at("entity_types").get<std::vector<std::string>>();
  v.types_.relation_types = j.at("relation_types").get<std::vector<std::string>>();
  return v;
}

// ---------------------------------------------------------------------------
// Encoding

bool TripletTensor::contains(int i, int j, int k) const {
  return std::binary_search(cells.begin(), cells.end(), std::array<int, 3>{i, j, k});
}

Mat TripletTensor::slice(int k) const {
  Mat m = Mat::Zero(n, n);
  for (const auto& c : cells)
    if (c[2] == k) m(c[0], c[1]) = 1.0;
  return m;
}

void validate_example(const Example& ex, size_t record_index) {
  auto fail = [record_index](const std::string& what) {
    throw ValidationError("record " + std::to_string(record_index) + ": " + what);
  };
  if (ex.tokens.empty()) fail("empty token list");
  int n = static_cast<int>(ex.tokens.size());
  std::set<std::tuple<int, int, int>> seen;
  for (const auto& e : ex.entities) {
    if (e.start < 0 || e.start > e.end || e.end >= n)
      fail("entity span (" + std::to_string(e.start) + "," + std::to_string(e.end) +
           ") out of range for " + std::to_string(n) + " tokens");
    if (!seen.insert({e.start, e.end, e.type}).second) fail("duplicate entity");
  }
  std::set<std::tuple<int, int, int>> tseen;
  for (const auto& t : ex.triplets) {
    int m = static_cast<int>(ex.entities.size());
    if (t.head < 0 || t.head >= m || t.tail < 0 || t.tail >= m)
      fail("triplet references entity out of range");
    if (t.relation < 0) fail("negative relation id");
    if (!tseen.insert({t.head, t.relation, t.tail}).second) fail("duplicate triplet");
  }
}

std::vector<int> spans_to_tags(const std::vector<Span>& entities, int n_tokens,
                               const Vocabulary& vocab, EncodeStats* stats) {
  std::vector<int> tags(static_cast<size_t>(n_tokens), Vocabulary::tag_o());
  std::vector<Span> order = entities;
  std::sort(order.begin(), order.end(), [](const Span& a, const Span& b) {
    int la = a.end - a.start, lb = b.end - b.start;
    if (la != lb) return la > lb;  // longest first
    return std::tie(a.start, a.type) < std::tie(b.start, b.type);
  });
  for (const auto& e : order) {
    bool free = true;
    for (int i = e.start; i <= e.end; ++i)
      if (tags[static_cast<size_t>(i)] != Vocabulary::tag_o()) free = false;
    if (!free) {
      if (stats) stats->overlap_tag_drops++;
      continue;
    }
    tags[static_cast<size_t>(e.start)] = vocab.tag_b(e.type);
    for (int i = e.start + 1; i <= e.end; ++i) tags[static_cast<size_t>(i)] = vocab.tag_i(e.type);
  }
  return tags;
}

EncodedExample encode_example(const Example& ex, const Vocabulary& vocab, int max_word_len,
                              EncodeStats* stats) {
  int n = static_cast<int>(ex.tokens.size());
  if (n == 0) throw ValidationError("cannot encode an empty sentence");
  EncodedExample enc;
  enc.max_word_len = max_word_len;
  enc.word_ids.reserve(static_cast<size_t>(n));
  enc.char_ids.assign(static_cast<size_t>(n) * static_cast<size_t>(max_word_len),
                      Vocabulary::kPadChar);
  for (int i = 0; i < n; ++i) {
    const std::string& tok = ex.tokens[static_cast<size_t>(i)];
    enc.word_ids.push_back(vocab.word_id(tok));
    int L = std::min<int>(max_word_len, static_cast<int>(tok.size()));
    for (int c = 0; c < L; ++c)
      enc.char_ids[static_cast<size_t>(i * max_word_len + c)] =
          vocab.char_id(tok[static_cast<size_t>(c)]);
  }

  for (const auto& e : ex.entities)
    if (e.type < 0 || e.type >= vocab.n_entity_types())
      throw ValidationError("entity type id " + std::to_string(e.type) + " absent from vocab");
  enc.tag_ids = spans_to_tags(ex.entities, n, vocab, stats);

  int K = vocab.n_relations();
  enc.rel_labels.assign(static_cast<size_t>(K), 0.0);
  enc.triplet_tensor.n = n;
  enc.triplet_tensor.K = K;
  for (const auto& t : ex.triplets) {
    if (t.relation < 0 || t.relation >= K)
      throw ValidationError("relation type id " + std::to_string(t.relation) +
                            " absent from vocab");
    const Span& head = ex.entities[static_cast<size_t>(t.head)];
    const Span& tail = ex.entities[static_cast<size_t>(t.tail)];
    enc.rel_labels[static_cast<size_t>(t.relation)] = 1.0;
    enc.triplet_tensor.cells.push_back({head.end, tail.end, t.relation});
  }
  auto& cells = enc.triplet_tensor.cells;
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

  if (stats) {
    // count distinct spans sharing a tail word (the tensor cannot tell them apart)
    std::map<int, std::set<std::pair<int, int>>> by_tail;
    for (const auto& e : ex.entities) by_tail[e.end].insert({e.start, e.type});
    for (const auto& [tail, spans] : by_tail)
      if (spans.size() > 1) stats->tail_word_collisions += spans.size() - 1;
  }
  return enc;
}

// ---------------------------------------------------------------------------
// Canonical JSONL

std::vector<Example> load_canonical(const std::string& path, TypeInventory& inv) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  std::vector<Example> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
    }
    Example ex;
    try {
      ex.tokens = j.at("tokens").get<std::vector<std::string>>();
      if (j.contains("entities")) {
        for (const auto& je : j.at("entities")) {
          Span s;
          s.start = je.at("start").get<int>();
          s.end = je.at("end").get<int>();
          s.type = inv.intern_entity(je.at("type").get<std::string>());
          ex.entities.push_back(s);
        }
      }
      if (j.contains("relations")) {
        for (const auto& jr : j.at("relations")) {
          TripletRef t;
          t.head = jr.at("head").get<int>();
          t.tail = jr.at("tail").get<int>();
          t.relation = inv.intern_relation(jr.at("type").get<std::string>());
          ex.triplets.push_back(t);
        }
      }
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
    }
    try {
      validate_example(ex, out.size());
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(ex));
  }
  if (out.empty()) log_warn("no records in " + path);
  return out;
}

std::vector<Example> load_canonical(const std::string& path) {
  TypeInventory inv;
  return load_canonical(path, inv);
}

void save_canonical(const std::vector<Example>& examples, const TypeInventory& inv,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open file for writing: " + path);
  for (const auto& ex : examples) {
    json j;
    j["tokens"] = ex.tokens;
    j["entities"] = json::array();
    for (const auto& e : ex.entities)
      j["entities"].push_back({{"start", e.start},
                               {"end", e.end},
                               {"type", inv.entity_types.at(static_cast<size_t>(e.type))}});
    j["relations"] = json::array();
    for (const auto& t : ex.triplets)
      j["relations"].push_back(
          {{"head", t.head},
           {"tail", t.tail},
           {"type", inv.relation_types.at(static_cast<size_t>(t.relation))}});
    out << j.dump(-1, ' ', false, json::error_handler_t::replace) << "\n";
  }
}

// ---------------------------------------------------------------------------
// CoNLL04

const TypeInventory& conll04_types() {
  static const TypeInventory inv{
      {"Location", "Organization", "Person", "Other"},
      {"Kill", "Live_in", "Located_in", "OrgBased_in", "Work_for"}};
  return inv;
}

namespace {

int conll04_entity_type(const std::string& raw, const std::string& where) {
  std::string t = lower(raw);
  if (t == "loc" || t == "location") return 0;
  if (t == "org" || t == "organization") return 1;
  if (t == "peop" || t == "person") return 2;
  if (t == "other") return 3;
  throw ParseError(where + ": unknown entity type string '" + raw + "'");
}

int conll04_relation_type(const std::string& raw, const std::string& where) {
  std::string t = lower(raw);
  const auto& rels = conll04_types().relation_types;
  for (size_t i = 0; i < rels.size(); ++i)
    if (lower(rels[i]) == t) return static_cast<int>(i);
  throw ParseError(where + ": unknown type string '" + raw + "'");
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string f;
  while (ss >> f) out.push_back(f);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool is_integer(const std::string& s) {
  if (s.empty()) return false;
  for (size_t i = (s[0] == '-' ? 1 : 0); i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

}  // namespace

std::vector<Example> parse_conll04_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);

  std::vector<Example> out;
  Example cur;
  std::string cur_sent_id;
  std::unordered_map<int, int> row_to_entity;  // corp row index -> entity index
  std::vector<std::array<std::string, 3>> pending_rels;
  bool in_relations = false;
  std::string line;
  size_t lineno = 0;

  auto finalize = [&](const std::string& where) {
    if (cur.tokens.empty() && pending_rels.empty()) return;
    for (const auto& r : pending_rels) {
      if (!is_integer(r[0]) || !is_integer(r[1]))
        throw ParseError(where + ": malformed relation line");
      int h = std::stoi(r[0]), t = std::stoi(r[1]);
      auto hi = row_to_entity.find(h), ti = row_to_entity.find(t);
      if (hi == row_to_entity.end() || ti == row_to_entity.end())
        throw ParseError(where + ": relation references non-entity row " +
                         (hi == row_to_entity.end() ? r[0] : r[1]));
      TripletRef tr;
      tr.head = hi->second;
      tr.tail = ti->second;
      tr.relation = conll04_relation_type(r[2], where);
      if (!std::count(cur.triplets.begin(), cur.triplets.end(), tr)) cur.triplets.push_back(tr);
    }
    validate_example(cur, out.size());
    out.push_back(std::move(cur));
    cur = Example{};
    row_to_entity.clear();
    pending_rels.clear();
    in_relations = false;
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::string where = path + ":" + std::to_string(lineno);
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() == 3 && is_integer(fields[0]) && is_integer(fields[1])) {
      in_relations = true;
      pending_rels.push_back({fields[0], fields[1], fields[2]});
      continue;
    }
    if (fields.size() < 6 || !is_integer(fields[2]))
      throw ParseError(where + ": malformed token row (" + std::to_string(fields.size()) +
                       " fields)");
    if (in_relations || (!cur.tokens.empty() && fields[0] != cur_sent_id)) finalize(where);
    cur_sent_id = fields[0];

    int row = std::stoi(fields[2]);
    const std::string& tag = fields[1];
    const std::string& words = fields[5];
    int start = static_cast<int>(cur.tokens.size());
    if (tag == "O") {
      cur.tokens.push_back(words);  // non-entity rows are verbatim tokens
    } else {
      for (const auto& w : split_on(words, '/')) cur.tokens.push_back(w);
      Span s;
      s.start = start;
      s.end = static_cast<int>(cur.tokens.size()) - 1;
      s.type = conll04_entity_type(tag, where);
      row_to_entity[row] = static_cast<int>(cur.entities.size());
      cur.entities.push_back(s);
    }
  }
  finalize(path + ":" + std::to_string(lineno));
  if (out.empty()) log_warn("no sentences in " + path);
  return out;
}

namespace {
std::string find_split_file(const std::string& dir, const std::string& split) {
  for (const std::string& name :
       {"conll04_" + split + ".corp", split + ".corp", "conll04-" + split + ".corp"}) {
    fs::path p = fs::path(dir) / name;
    if (fs::exists(p)) return p.string();
  }
  return {};
}
}  // namespace

Conll04Splits load_conll04_splits(const std::string& dir) {
  std::string train = find_split_file(dir, "train");
  std::string test = find_split_file(dir, "test");
  if (train.empty() || test.empty())
    throw ParseError("missing CoNLL04 split files under " + dir +
                     " (expected conll04_{train,test}.corp or {train,test}.corp)");
  Conll04Splits s;
  s.train = parse_conll04_file(train);
  s.test = parse_conll04_file(test);
  std::string dev = find_split_file(dir, "dev");
  if (!dev.empty()) s.dev = parse_conll04_file(dev);
  return s;
}

std::pair<std::vector<Example>, std::vector<Example>> load_conll04(const std::string& dir) {
  Conll04Splits s = load_conll04_splits(dir);
  return {std::move(s.train), std::move(s.test)};
}

// ---------------------------------------------------------------------------
// ADE

const TypeInventory& ade_types() {
  static const TypeInventory inv{{"ENT"}, {"Adverse-Effect", "Drug-Disease Treatment"}};
  return inv;
}

namespace {
int ade_relation_type(const std::string& raw, const std::string& where) {
  std::string t = lower(raw);
  const auto& rels = ade_types().relation_types;
  for (size_t i = 0; i < rels.size(); ++i)
    if (lower(rels[i]) == t) return static_cast<int>(i);
  throw ParseError(where + ": unknown type string '" + raw + "'");
}
}  // namespace

std::vector<Example> parse_ade_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  char first = 0;
  in >> std::ws;
  in.get(first);
  in.seekg(0);

  std::vector<Example> out;
  if (first == '[') {
    json arr;
    try {
      arr = json::parse(in);
    } catch (const json::exception& e) {
      throw ParseError(path + ": malformed JSON array: " + std::string(e.what()));
    }
    size_t idx = 0;
    for (const auto& j : arr) {
      std::string where = path + " record " + std::to_string(idx);
      Example ex;
      try {
        ex.tokens = j.at("tokens").get<std::vector<std::string>>();
        for (const auto& je : j.at("entities")) {
          Span s;
          s.start = je.at("start").get<int>();
          s.end = je.at("end").get<int>() - 1;  // exclusive -> inclusive
          s.type = 0;                           // untyped B/I/O scheme
          ex.entities.push_back(s);
        }
        if (j.contains("relations")) {
          for (const auto& jr : j.at("relations")) {
            TripletRef t;
            t.head = jr.at("head").get<int>();
            t.tail = jr.at("tail").get<int>();
            t.relation = ade_relation_type(jr.at("type").get<std::string>(), where);
            if (!std::count(ex.triplets.begin(), ex.triplets.end(), t)) ex.triplets.push_back(t);
          }
        }
      } catch (const json::exception& e) {
        throw ParseError(where + ": " + e.what());
      }
      // the corpus has a handful of exact duplicate spans (discontinuous
      // annotations collapse); drop them rather than reject the sentence
      std::vector<Span> uniq;
      std::vector<int> remap(ex.entities.size());
      for (size_t i = 0; i < ex.entities.size(); ++i) {
        auto it = std::find(uniq.begin(), uniq.end(), ex.entities[i]);
        if (it == uniq.end()) {
          remap[i] = static_cast<int>(uniq.size());
          uniq.push_back(ex.entities[i]);
        } else {
          remap[i] = static_cast<int>(it - uniq.begin());
        }
      }
      ex.entities = uniq;
      for (auto& t : ex.triplets) {
        t.head = remap[static_cast<size_t>(t.head)];
        t.tail = remap[static_cast<size_t>(t.tail)];
      }
      std::sort(ex.triplets.begin(), ex.triplets.end());
      ex.triplets.erase(std::unique(ex.triplets.begin(), ex.triplets.end()), ex.triplets.end());
      validate_example(ex, idx);
      out.push_back(std::move(ex));
      ++idx;
    }
  } else {
    TypeInventory local;
    out = load_canonical(path, local);
    for (auto& ex : out) {
      for (auto& e : ex.entities) e.type = 0;
      for (auto& t : ex.triplets) {
        const std::string& name = local.relation_types.at(static_cast<size_t>(t.relation));
        t.relation = ade_relation_type(name, path);
      }
    }
  }
  if (out.empty()) log_warn("no records in " + path);
  return out;
}

std::pair<std::vector<Example>, std::vector<Example>> load_ade(const std::string& path,
                                                               uint64_t seed,
                                                               double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("train_fraction must be in (0,1), got " +
                          std::to_string(train_fraction));
  std::vector<Example> all = parse_ade_file(path);
  std::vector<size_t> idx(all.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(mix_seed(seed, 0xade));
  deterministic_shuffle(idx, rng);
  size_t n_train = static_cast<size_t>(
      std::llround(train_fraction * static_cast<double>(all.size())));
  n_train = std::min(n_train, all.size());
  std::pair<std::vector<Example>, std::vector<Example>> out;
  for (size_t i = 0; i < idx.size(); ++i)
    (i < n_train ? out.first : out.second).push_back(all[idx[i]]);
  return out;
}

std::vector<std::pair<std::vector<Example>, std::vector<Example>>> ade_kfold(
    const std::string& path, int folds, uint64_t seed) {
  if (folds < 2) throw ValidationError("k-fold requires folds >= 2");
  std::vector<Example> all = parse_ade_file(path);
  std::vector<size_t> idx(all.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(mix_seed(seed, 0xade));
  deterministic_shuffle(idx, rng);
  std::vector<std::pair<std::vector<Example>, std::vector<Example>>> out(
      static_cast<size_t>(folds));
  for (int f = 0; f < folds; ++f) {
    size_t lo = idx.size() * static_cast<size_t>(f) / static_cast<size_t>(folds);
    size_t hi = idx.size() * static_cast<size_t>(f + 1) / static_cast<size_t>(folds);
    for (size_t i = 0; i < idx.size(); ++i)
      (i >= lo && i < hi ? out[static_cast<size_t>(f)].second
                         : out[static_cast<size_t>(f)].first)
          .push_back(all[idx[i]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// NYT10 (HRL release format)

namespace {
std::vector<std::string> tokenize_ws(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string t;
  while (ss >> t) out.push_back(t);
  return out;
}

// first token position where `needle` appears as a contiguous run, or -1
int find_token_span(const std::vector<std::string>& tokens,
                    const std::vector<std::string>& needle, int hint) {
  if (needle.empty() || needle.size() > tokens.size()) return -1;
  auto match_at = [&](size_t s) {
    for (size_t i = 0; i < needle.size(); ++i)
      if (tokens[s + i] != needle[i]) return false;
    return true;
  };
  if (hint >= 0 && static_cast<size_t>(hint) + needle.size() <= tokens.size() &&
      match_at(static_cast<size_t>(hint)))
    return hint;
  for (size_t s = 0; s + needle.size() <= tokens.size(); ++s)
    if (match_at(s)) return static_cast<int>(s);
  return -1;
}
}  // namespace

std::vector<Example> parse_nyt10_file(const std::string& path, TypeInventory& inv) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  std::vector<Example> out;
  std::string line;
  size_t lineno = 0;
  size_t skipped_mentions = 0, skipped_relations = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
    }
    Example ex;
    std::vector<std::string> mention_text;
    try {
      ex.tokens = tokenize_ws(j.at("sentText").get<std::string>());
      if (ex.tokens.empty()) continue;
      for (const auto& je : j.value("entityMentions", json::array())) {
        std::string text = je.at("text").get<std::string>();
        auto needle = tokenize_ws(text);
        int hint = je.contains("start") ? je["start"].get<int>() : -1;
        int start = find_token_span(ex.tokens, needle, hint);
        if (start < 0) {
          ++skipped_mentions;
          continue;
        }
        Span s;
        s.start = start;
        s.end = start + static_cast<int>(needle.size()) - 1;
        s.type = inv.intern_entity(je.at("label").get<std::string>());
        if (std::find(ex.entities.begin(), ex.entities.end(), s) == ex.entities.end()) {
          ex.entities.push_back(s);
          mention_text.push_back(text);
        }
      }
      for (const auto& jr : j.value("relationMentions", json::array())) {
        std::string label = jr.at("label").get<std::string>();
        if (label == "None") continue;
        std::string e1 = jr.at("em1Text").get<std::string>();
        std::string e2 = jr.at("em2Text").get<std::string>();
        int hi = -1, ti = -1;
        for (size_t i = 0; i < mention_text.size(); ++i) {
          if (hi < 0 && mention_text[i] == e1) hi = static_cast<int>(i);
          if (mention_text[i] == e2 && static_cast<int>(i) != hi && ti < 0)
            ti = static_cast<int>(i);
        }
        if (ti < 0) {  // e2 may equal e1's text but a distinct mention was not found
          for (size_t i = 0; i < mention_text.size(); ++i)
            if (mention_text[i] == e2) ti = static_cast<int>(i);
        }
        if (hi < 0 || ti < 0 || hi == ti) {
          ++skipped_relations;
          continue;
        }
        TripletRef t;
        t.head = hi;
        t.tail = ti;
        t.relation = inv.intern_relation(label);
        if (!std::count(ex.triplets.begin(), ex.triplets.end(), t)) ex.triplets.push_back(t);
      }
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
    }
    validate_example(ex, out.size());
    out.push_back(std::move(ex));
  }
  if (skipped_mentions || skipped_relations)
    log_warn(path + ": skipped " + std::to_string(skipped_mentions) +
             " unlocatable mentions, " + std::to_string(skipped_relations) +
             " unresolvable relations");
  if (out.empty()) log_warn("no records in " + path);
  return out;
}

Nyt10Data load_nyt10_dataset(const std::string& dir) {
  fs::path train = fs::path(dir) / "train.json";
  fs::path test = fs::path(dir) / "test.json";
  if (!fs::exists(train) || !fs::exists(test))
    throw ParseError("missing NYT10 files under " + dir + " (expected train.json, test.json)");
  Nyt10Data d;
  d.train = parse_nyt10_file(train.string(), d.types);
  d.test = parse_nyt10_file(test.string(), d.types);
  return d;
}

std::pair<std::vector<Example>, std::vector<Example>> load_nyt10(const std::string& dir) {
  Nyt10Data d = load_nyt10_dataset(dir);
  return {std::move(d.train), std::move(d.test)};
}

// ---------------------------------------------------------------------------

CorpusStats corpus_stats(const std::vector<Example>& examples) {
  CorpusStats s;
  std::set<int> ents, rels;
  for (const auto& ex : examples) {
    s.sentences++;
    s.triplets += ex.triplets.size();
    s.entity_mentions += ex.entities.size();
    for (const auto& e : ex.entities) ents.insert(e.type);
    for (const auto& t : ex.triplets) rels.insert(t.relation);
  }
  s.entity_type_count = ents.size();
  s.relation_type_count = rels.size();
  return s;
}

std::unordered_map<std::string, std::vector<double>> load_pretrained_embeddings(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embeddings file: " + path);
  std::unordered_map<std::string, std::vector<double>> out;
  std::string line;
  size_t lineno = 0;
  size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> v;
    double x;
    while (ss >> x) v.push_back(x);
    if (v.empty()) throw ParseError(path + ":" + std::to_string(lineno) + ": no values");
    if (dim == 0) dim = v.size();
    if (v.size() != dim)
      throw ParseError(path + ":" + std::to_string(lineno) + ": inconsistent dimension");
    out[lower(word)] = std::move(v);
  }
  return out;
}

}  // namespace tdre
