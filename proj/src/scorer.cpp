#include "expanse/scorer.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <future>
#include <map>
#include <mutex>

#include "expanse/error.hpp"

namespace expanse {

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::lm: return "lm";
    case ScorerKind::nli: return "nli";
    case ScorerKind::infill: break;
  }
  return "infill";
}

std::string_view to_string(ScorerBackend backend) {
  switch (backend) {
    case ScorerBackend::builtin_ngram: return "builtin_ngram";
    case ScorerBackend::builtin_overlap: return "builtin_overlap";
    case ScorerBackend::external: break;
  }
  return "external";
}

namespace {

// Line IO over a pair of file descriptors.
class FdTransport : public Transport {
 public:
  FdTransport(int read_fd, int write_fd, bool socket) : read_fd_(read_fd), write_fd_(write_fd), socket_(socket) {}

  ~FdTransport() override {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
  }

  void send_line(const std::string& line) override {
    std::string buf = line;
    buf += '\n';
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
      ssize_t n = socket_ ? ::send(write_fd_, p, left, MSG_NOSIGNAL) : ::write(write_fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw OracleError(describe() + ": write failed: " + std::strerror(errno));
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
  }

  std::optional<std::string> read_line() override {
    while (true) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char chunk[4096];
      ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        return std::nullopt;
      }
      if (n == 0) {
        if (buffer_.empty()) return std::nullopt;
        std::string line;
        line.swap(buffer_);
        return line;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void close_send() override {
    if (socket_) {
      ::shutdown(write_fd_, SHUT_WR);
    } else if (write_fd_ >= 0) {
      ::close(write_fd_);
      write_fd_ = -1;
    }
  }

 protected:
  virtual std::string describe() const { return "oracle"; }

  int read_fd_;
  int write_fd_;
  bool socket_;
  std::string buffer_;
};

class ProcessTransport final : public FdTransport {
 public:
  ProcessTransport(pid_t pid, int read_fd, int write_fd, std::string command)
      : FdTransport(read_fd, write_fd, false), pid_(pid), command_(std::move(command)) {}

  ~ProcessTransport() override {
    close_send();
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

 protected:
  std::string describe() const override { return "oracle process '" + command_ + "'"; }

 private:
  pid_t pid_;
  std::string command_;
};

class LoopbackTransport final : public Transport {
 public:
  explicit LoopbackTransport(std::function<nlohmann::json(const nlohmann::json&)> handler)
      : handler_(std::move(handler)) {}

  void send_line(const std::string& line) override {
    nlohmann::json response;
    nlohmann::json request;
    try {
      request = nlohmann::json::parse(line);
      response = handler_(request);
      if (response.is_object() && !response.contains("id")) response["id"] = request.at("id");
    } catch (const std::exception& e) {
      response = {{"id", request.value("id", "")}, {"error", e.what()}};
    }
    std::lock_guard lock(mu_);
    if (closed_) throw OracleError("loopback oracle: send after close");
    queue_.push_back(response.dump());
    cv_.notify_one();
  }

  std::optional<std::string> read_line() override {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return closed_ || !queue_.empty(); });
    if (queue_.empty()) return std::nullopt;
    std::string line = std::move(queue_.front());
    queue_.pop_front();
    return line;
  }

  void close_send() override {
    std::lock_guard lock(mu_);
    closed_ = true;
    cv_.notify_all();
  }

 private:
  std::function<nlohmann::json(const nlohmann::json&)> handler_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> queue_;
  bool closed_ = false;
};

}  // namespace

std::unique_ptr<Transport> spawn_process(const std::string& command) {
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });

  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) throw OracleError("pipe failed: " + std::string(std::strerror(errno)));
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw OracleError("pipe failed: " + std::string(std::strerror(errno)));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
    throw OracleError("fork failed: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<ProcessTransport>(pid, from_child[0], to_child[1], command);
}

std::unique_ptr<Transport> connect_tcp(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw OracleError("tcp address must be host:port, got '" + address + "'");
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw OracleError("cannot resolve '" + address + "': " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (auto* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw OracleError("cannot connect to '" + address + "'");
  return std::make_unique<FdTransport>(fd, fd, true);
}

std::unique_ptr<Transport> loopback(std::function<nlohmann::json(const nlohmann::json&)> handler) {
  return std::make_unique<LoopbackTransport>(std::move(handler));
}

struct ExternalClient::State {
  std::mutex mu;
  std::mutex write_mu;
  std::map<std::string, std::promise<nlohmann::json>> pending;
  bool closed = false;
  std::string close_reason;
  std::uint64_t next_id = 0;

  void fail_all(const std::string& reason) {
    std::lock_guard lock(mu);
    closed = true;
    close_reason = reason;
    for (auto& [id, p] : pending) p.set_exception(std::make_exception_ptr(OracleError(reason)));
    pending.clear();
  }
};

ExternalClient::ExternalClient(std::unique_ptr<Transport> transport, std::string endpoint)
    : transport_(std::move(transport)), endpoint_(std::move(endpoint)), state_(std::make_shared<State>()) {
  reader_ = std::thread([this] { reader_loop(); });
}

ExternalClient::~ExternalClient() {
  transport_->close_send();
  if (reader_.joinable()) reader_.join();
}

void ExternalClient::reader_loop() {
  while (auto line = transport_->read_line()) {
    if (line->find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json response;
    try {
      response = nlohmann::json::parse(*line);
    } catch (const nlohmann::json::parse_error&) {
      state_->fail_all("oracle '" + endpoint_ + "' sent a malformed response: " + line->substr(0, 200));
      return;
    }
    if (!response.is_object() || !response.contains("id") || !response["id"].is_string()) {
      state_->fail_all("oracle '" + endpoint_ + "' sent a response without a string id");
      return;
    }
    std::lock_guard lock(state_->mu);
    auto it = state_->pending.find(response["id"].get<std::string>());
    if (it == state_->pending.end()) continue;
    it->second.set_value(std::move(response));
    state_->pending.erase(it);
  }
  state_->fail_all("oracle '" + endpoint_ + "' closed its output");
}

nlohmann::json ExternalClient::call(nlohmann::json request) {
  std::future<nlohmann::json> future;
  std::string id;
  {
    std::lock_guard lock(state_->mu);
    if (state_->closed) throw OracleError(state_->close_reason);
    id = "r" + std::to_string(state_->next_id++);
    future = state_->pending[id].get_future();
  }
  request["id"] = id;
  try {
    std::lock_guard lock(state_->write_mu);
    transport_->send_line(request.dump());
  } catch (...) {
    std::lock_guard lock(state_->mu);
    state_->pending.erase(id);
    throw;
  }
  nlohmann::json response = future.get();
  if (auto it = response.find("error"); it != response.end()) {
    throw OracleError("oracle '" + endpoint_ + "' reported: " + (it->is_string() ? it->get<std::string>() : it->dump()));
  }
  return response;
}

std::shared_ptr<ExternalClient> open_external(const std::string& endpoint) {
  constexpr std::string_view kTcp = "tcp://";
  if (endpoint.rfind(kTcp, 0) == 0) {
    return std::make_shared<ExternalClient>(connect_tcp(endpoint.substr(kTcp.size())), endpoint);
  }
  return std::make_shared<ExternalClient>(spawn_process(endpoint), endpoint);
}

class ScorerHandle::Backend {
 public:
  virtual ~Backend() = default;
  virtual lm::LmScore lm(const TokenSeq&) const { throw OracleError("backend cannot score lm requests"); }
  virtual double nli(const TokenSeq&, const TokenSeq&) const { throw OracleError("backend cannot score nli requests"); }
  virtual lm::LmScore infill(const InfillTemplatePair&, std::string_view) const {
    throw OracleError("backend cannot score infill requests");
  }
  virtual std::string endpoint() const { return "builtin"; }
};

namespace {

class NgramBackend final : public ScorerHandle::Backend {
 public:
  explicit NgramBackend(std::shared_ptr<const lm::NgramModel> model) : model_(std::move(model)) {
    if (!model_) throw ValidationError("builtin scorer needs a model");
  }
  lm::LmScore lm(const TokenSeq& tokens) const override { return lm::nll(*model_, tokens); }
  lm::LmScore infill(const InfillTemplatePair& templ, std::string_view) const override {
    return lm::infill_nll(*model_, templ);
  }

 private:
  std::shared_ptr<const lm::NgramModel> model_;
};

class OverlapBackend final : public ScorerHandle::Backend {
 public:
  explicit OverlapBackend(StopwordSet stopwords) : stopwords_(std::move(stopwords)) {}

  double nli(const TokenSeq& premise, const TokenSeq& hypothesis) const override {
    std::set<std::string> have;
    for (const auto& t : premise) have.insert(to_lower_ascii(t));
    std::size_t content = 0;
    std::size_t found = 0;
    for (const auto& t : hypothesis) {
      if (!is_content_token(t, stopwords_)) continue;
      ++content;
      found += have.count(to_lower_ascii(t));
    }
    return content == 0 ? 1.0 : static_cast<double>(found) / static_cast<double>(content);
  }

 private:
  StopwordSet stopwords_;
};

lm::LmScore lm_score_from(const nlohmann::json& r, const std::string& endpoint) {
  const auto nll = r.find("nll_sum");
  const auto count = r.find("token_count");
  if (nll == r.end() || !nll->is_number() || count == r.end() || !count->is_number_integer()) {
    throw OracleError("oracle '" + endpoint + "' response lacks numeric nll_sum/token_count");
  }
  lm::LmScore s{nll->get<double>(), 0};
  const auto n = count->get<long long>();
  if (!std::isfinite(s.nll_sum) || n <= 0) {
    throw OracleError("oracle '" + endpoint + "' returned a non-finite nll_sum or non-positive token_count");
  }
  s.token_count = static_cast<std::size_t>(n);
  return s;
}

class ExternalBackend final : public ScorerHandle::Backend {
 public:
  explicit ExternalBackend(std::shared_ptr<ExternalClient> client) : client_(std::move(client)) {
    if (!client_) throw ValidationError("external scorer needs a client");
  }

  lm::LmScore lm(const TokenSeq& tokens) const override {
    auto r = client_->call({{"kind", "lm"}, {"input", tokens}});
    return lm_score_from(r, client_->endpoint());
  }

  double nli(const TokenSeq& premise, const TokenSeq& hypothesis) const override {
    auto r = client_->call(
        {{"kind", "nli"}, {"input", nlohmann::json::array()}, {"premise", premise}, {"hypothesis", hypothesis}});
    const auto e = r.find("entailment");
    if (e == r.end() || !e->is_number()) {
      throw OracleError("oracle '" + client_->endpoint() + "' response lacks numeric entailment");
    }
    const double v = e->get<double>();
    if (!(v >= 0.0 && v <= 1.0)) throw OracleError("oracle '" + client_->endpoint() + "' entailment outside [0,1]");
    return v;
  }

  lm::LmScore infill(const InfillTemplatePair& templ, std::string_view mask_format) const override {
    auto r = client_->call({{"kind", "infill"},
                            {"input", templ.input.render(mask_format)},
                            {"target", templ.target.render(mask_format)}});
    return lm_score_from(r, client_->endpoint());
  }

  std::string endpoint() const override { return client_->endpoint(); }

 private:
  std::shared_ptr<ExternalClient> client_;
};

}  // namespace

ScorerHandle::ScorerHandle(ScorerKind kind, ScorerBackend backend, std::shared_ptr<const Backend> impl)
    : kind_(kind), backend_(backend), impl_(std::move(impl)) {}

ScorerHandle ScorerHandle::builtin_lm(std::shared_ptr<const lm::NgramModel> model) {
  return {ScorerKind::lm, ScorerBackend::builtin_ngram, std::make_shared<NgramBackend>(std::move(model))};
}

ScorerHandle ScorerHandle::builtin_infill(std::shared_ptr<const lm::NgramModel> model) {
  return {ScorerKind::infill, ScorerBackend::builtin_ngram, std::make_shared<NgramBackend>(std::move(model))};
}

ScorerHandle ScorerHandle::builtin_overlap(StopwordSet stopwords) {
  return {ScorerKind::nli, ScorerBackend::builtin_overlap, std::make_shared<OverlapBackend>(std::move(stopwords))};
}

ScorerHandle ScorerHandle::external(ScorerKind kind, std::shared_ptr<ExternalClient> client) {
  return {kind, ScorerBackend::external, std::make_shared<ExternalBackend>(std::move(client))};
}

std::string ScorerHandle::endpoint() const { return impl_->endpoint(); }

void ScorerHandle::require(ScorerKind kind) const {
  if (kind_ != kind) {
    throw ValidationError("scorer of kind " + std::string(to_string(kind_)) + " used for " +
                          std::string(to_string(kind)) + " scoring");
  }
}

lm::LmScore ScorerHandle::score_lm(const TokenSeq& tokens) const {
  require(ScorerKind::lm);
  if (tokens.empty()) throw ValidationError("empty input");
  return impl_->lm(tokens);
}

double ScorerHandle::score_nli(const TokenSeq& premise, const TokenSeq& hypothesis) const {
  require(ScorerKind::nli);
  return impl_->nli(premise, hypothesis);
}

lm::LmScore ScorerHandle::score_infill(const InfillTemplatePair& templ, std::string_view mask_format) const {
  require(ScorerKind::infill);
  return impl_->infill(templ, mask_format);
}

}  // namespace expanse
