#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include "expanse/corpus.hpp"
#include "expanse/ngram_lm.hpp"
#include "expanse/template.hpp"
#include "expanse/text_util.hpp"

namespace expanse {

enum class ScorerKind { lm, nli, infill };
enum class ScorerBackend { builtin_ngram, builtin_overlap, external };

std::string_view to_string(ScorerKind kind);
std::string_view to_string(ScorerBackend backend);

// Line transport for the external-scorer protocol. send_line/read_line are
// called from different threads; each direction has a single user.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send_line(const std::string& line) = 0;
  // nullopt on end of stream.
  virtual std::optional<std::string> read_line() = 0;
  // Closes the sending direction so the peer sees end of input.
  virtual void close_send() = 0;
};

// Runs `command` through /bin/sh -c and talks over its stdin/stdout.
std::unique_ptr<Transport> spawn_process(const std::string& command);

// Connects to "host:port".
std::unique_ptr<Transport> connect_tcp(const std::string& address);

// In-process peer answering each request line with handler(request). The
// request id is copied into responses that lack one.
std::unique_ptr<Transport> loopback(std::function<nlohmann::json(const nlohmann::json&)> handler);

// Request/response client for the line-delimited JSON protocol:
//   request  {"id", "kind", "input", "target"?, "premise"?, "hypothesis"?}
//   response {"id", "nll_sum", "token_count"} | {"id", "entailment"} | {"id", "error"}
// Any number of threads may call `call` concurrently; writes are serialized
// and responses are routed back by id in whatever order they arrive.
class ExternalClient {
 public:
  ExternalClient(std::unique_ptr<Transport> transport, std::string endpoint);
  ~ExternalClient();
  ExternalClient(const ExternalClient&) = delete;
  ExternalClient& operator=(const ExternalClient&) = delete;

  // Assigns the id, sends, and blocks for the matching response. Throws
  // OracleError on transport failure or an error response.
  nlohmann::json call(nlohmann::json request);

  const std::string& endpoint() const noexcept { return endpoint_; }

 private:
  struct State;
  void reader_loop();

  std::unique_ptr<Transport> transport_;
  std::string endpoint_;
  std::shared_ptr<State> state_;
  std::thread reader_;
};

// "builtin" or anything else (a shell command, or tcp://host:port).
std::shared_ptr<ExternalClient> open_external(const std::string& endpoint);

// A scoring oracle of one kind. Cheap to copy; copies share the backend.
class ScorerHandle {
 public:
  class Backend;

  static ScorerHandle builtin_lm(std::shared_ptr<const lm::NgramModel> model);
  static ScorerHandle builtin_infill(std::shared_ptr<const lm::NgramModel> model);
  // Entailment = content-token recall of the hypothesis in the premise.
  static ScorerHandle builtin_overlap(StopwordSet stopwords);
  static ScorerHandle external(ScorerKind kind, std::shared_ptr<ExternalClient> client);

  ScorerKind kind() const noexcept { return kind_; }
  ScorerBackend backend() const noexcept { return backend_; }
  std::string endpoint() const;

  lm::LmScore score_lm(const TokenSeq& tokens) const;
  double score_nli(const TokenSeq& premise, const TokenSeq& hypothesis) const;
  lm::LmScore score_infill(const InfillTemplatePair& templ, std::string_view mask_format) const;

 private:
  ScorerHandle(ScorerKind kind, ScorerBackend backend, std::shared_ptr<const Backend> impl);
  void require(ScorerKind kind) const;

  ScorerKind kind_;
  ScorerBackend backend_;
  std::shared_ptr<const Backend> impl_;
};

}  // namespace expanse
