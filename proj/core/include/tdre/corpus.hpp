#pragma once

#include "tdre/types.hpp"
#include "tdre/util.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tdre {

/// Entity/relation type names in id order. Examples carry indices into these
/// lists; an inventory is shared across the splits of one dataset.
struct TypeInventory {
  std::vector<std::string> entity_types;
  std::vector<std::string> relation_types;

  int entity_id(const std::string& t) const;    // -1 when absent
  int relation_id(const std::string& t) const;  // -1 when absent
  int intern_entity(const std::string& t);
  int intern_relation(const std::string& t);
};

/// Immutable id maps shared by every module. Reserved ids: word 0 = <unk>,
/// char 0 = <pad>, char 1 = <unk>. Tag 0 is always "O"; B-t/I-t pairs follow
/// in entity-type order.
class Vocabulary {
 public:
  static Vocabulary build(const std::vector<Example>& examples, const TypeInventory& types,
                          const std::vector<std::string>& pretrained_words = {});

  int word_id(const std::string& w) const;  // lowercased lookup, unk fallback
  int char_id(char c) const;
  int n_words() const { return static_cast<int>(words_.size()); }
  int n_chars() const { return static_cast<int>(chars_.size()); }

  int n_entity_types() const { return static_cast<int>(types_.entity_types.size()); }
  int n_tags() const { return 2 * n_entity_types() + 1; }
  int n_relations() const { return static_cast<int>(types_.relation_types.size()); }

  int tag_b(int entity_type) const { return 1 + 2 * entity_type; }
  int tag_i(int entity_type) const { return 2 + 2 * entity_type; }
  static constexpr int tag_o() { return 0; }
  std::string tag_name(int tag_id) const;

  const TypeInventory& types() const { return types_; }
  const std::vector<std::string>& words() const { return words_; }

  std::string to_json() const;
  static Vocabulary from_json(const std::string& json_text);
  std::string hash() const { return to_hex(fnv1a(to_json())); }

  static constexpr int kUnkWord = 0;
  static constexpr int kPadChar = 0;
  static constexpr int kUnkChar = 1;

 private:
  std::vector<std::string> words_;
  std::vector<unsigned char> chars_;  // index = id (ids 0/1 reserved)
  TypeInventory types_;
  std::unordered_map<std::string, int> word_ids_;
  std::unordered_map<char, int> char_ids_;
};

/// Sparse {0,1}^{n x n x K} triplet tensor addressed by entity tail words.
struct TripletTensor {
  int n = 0;
  int K = 0;
  std::vector<std::array<int, 3>> cells;  // (i, j, k), sorted, unique

  bool contains(int i, int j, int k) const;
  size_t count() const { return cells.size(); }
  Mat slice(int k) const;  // dense n x n 0/1 matrix
};

struct EncodedExample {
  std::vector<int> word_ids;
  std::vector<int> char_ids;  // n x max_word_len, row-major
  int max_word_len = 0;
  std::vector<int> tag_ids;
  std::vector<double> rel_labels;  // y in {0,1}^K
  TripletTensor triplet_tensor;
};

struct EncodeStats {
  size_t tail_word_collisions = 0;  // distinct gold spans sharing a tail word
  size_t overlap_tag_drops = 0;     // entities skipped during BIO tagging
};

/// BIO tags for a span set. On overlap the longest span wins (ties: earliest
/// start); losers are counted in `stats` and skipped.
std::vector<int> spans_to_tags(const std::vector<Span>& entities, int n_tokens,
                               const Vocabulary& vocab, EncodeStats* stats = nullptr);

EncodedExample encode_example(const Example& ex, const Vocabulary& vocab, int max_word_len = 20,
                              EncodeStats* stats = nullptr);

void validate_example(const Example& ex, size_t record_index);

// ---- loaders ----

/// Canonical line-delimited JSON records. Types are interned into `inv` in
/// first-occurrence order. Throws ParseError (with line numbers) or
/// ValidationError.
std::vector<Example> load_canonical(const std::string& path, TypeInventory& inv);
std::vector<Example> load_canonical(const std::string& path);
void save_canonical(const std::vector<Example>& examples, const TypeInventory& inv,
                    const std::string& path);

/// Fixed published type sets.
const TypeInventory& conll04_types();
const TypeInventory& ade_types();

struct Conll04Splits {
  std::vector<Example> train;
  std::vector<Example> dev;  // empty when the release has no dev file
  std::vector<Example> test;
};

/// Expects a directory with {conll04_train.corp, conll04_test.corp} or
/// {train.corp, test.corp}; an optional dev file is picked up when present.
Conll04Splits load_conll04_splits(const std::string& dir);
std::pair<std::vector<Example>, std::vector<Example>> load_conll04(const std::string& dir);
std::vector<Example> parse_conll04_file(const std::string& path);

/// ADE corpus: one file holding a JSON array of {tokens, entities, relations}
/// records (exclusive span ends) or canonical JSONL. Entity types collapse to
/// a single untyped class so the tag scheme is plain B/I/O.
std::vector<Example> parse_ade_file(const std::string& path);
std::pair<std::vector<Example>, std::vector<Example>> load_ade(const std::string& path,
                                                               uint64_t seed,
                                                               double train_fraction);
std::vector<std::pair<std::vector<Example>, std::vector<Example>>> ade_kfold(
    const std::string& path, int folds, uint64_t seed);

/// NYT10 (HRL-filtered release): JSON lines with sentText / entityMentions /
/// relationMentions.
struct Nyt10Data {
  std::vector<Example> train;
  std::vector<Example> test;
  TypeInventory types;
};

Nyt10Data load_nyt10_dataset(const std::string& dir);  // dir with train.json, test.json
std::pair<std::vector<Example>, std::vector<Example>> load_nyt10(const std::string& dir);
std::vector<Example> parse_nyt10_file(const std::string& path, TypeInventory& inv);

struct CorpusStats {
  size_t sentences = 0;
  size_t triplets = 0;
  size_t entity_mentions = 0;
  size_t entity_type_count = 0;    // distinct ids observed
  size_t relation_type_count = 0;  // distinct ids observed
};

CorpusStats corpus_stats(const std::vector<Example>& examples);

/// Loads whitespace-separated `word v1 ... vD` embedding rows.
std::unordered_map<std::string, std::vector<double>> load_pretrained_embeddings(
    const std::string& path);

}  // namespace tdre
