#include "freqrise/external_model.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <json.hpp>
#include <thread>

#include "freqrise/error.hpp"

namespace freqrise {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string describe_errno(const std::string& what) { return what + ": " + std::strerror(errno); }

}  // namespace

std::string encode_request(long long id, const SignalBatch& batch) {
  json rows = json::array();
  for (std::size_t i = 0; i < batch.rows; ++i) {
    auto row = batch.row(i);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return json{{"id", id}, {"signals", std::move(rows)}}.dump();
}

std::string encode_response(long long id, const std::vector<std::vector<double>>& logits) {
  return json{{"id", id}, {"logits", logits}}.dump();
}

ExternalModel::ExternalModel(std::string command, ExternalModelOptions options)
    : command_(std::move(command)), options_(options), classes_(options.num_classes) {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0)
    throw EndpointError(describe_errno("socketpair"));
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw EndpointError(describe_errno("fork"));
  }
  if (pid == 0) {
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);
  child_ = pid;
  fd_ = fds[0];
}

ExternalModel::~ExternalModel() { shutdown(); }

void ExternalModel::shutdown() noexcept {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_WR);
    ::close(fd_);
    fd_ = -1;
  }
  if (child_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(child_, &status, WNOHANG) != 0) {
        child_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(child_, SIGKILL);
    ::waitpid(child_, &status, 0);
    child_ = -1;
  }
}

std::size_t ExternalModel::num_classes() const {
  std::lock_guard lock(mutex_);
  return classes_;
}

void ExternalModel::send_line(const std::string& line) const {
  std::string data = line + "\n";
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw EndpointError(describe_errno("writing request to endpoint '" + command_ + "'"));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string ExternalModel::receive_line() const {
  const auto deadline = Clock::now() + options_.timeout;
  char buffer[65536];
  for (;;) {
    if (auto pos = pending_.find('\n'); pos != std::string::npos) {
      std::string line = pending_.substr(0, pos);
      pending_.erase(0, pos + 1);
      return line;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (remaining.count() <= 0) throw EndpointError("endpoint '" + command_ + "' timed out");
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw EndpointError(describe_errno("poll"));
    }
    if (ready == 0) throw EndpointError("endpoint '" + command_ + "' timed out");
    const ssize_t n = ::recv(fd_, buffer, sizeof(buffer), 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw EndpointError(describe_errno("reading from endpoint"));
    }
    if (n == 0) throw EndpointError("endpoint '" + command_ + "' closed its output");
    pending_.append(buffer, static_cast<std::size_t>(n));
  }
}

std::vector<double> ExternalModel::logits(const SignalBatch& batch) const {
  check_length(batch);
  std::lock_guard lock(mutex_);
  if (fd_ < 0) throw EndpointError("endpoint is not running");
  const long long id = next_id_++;
  send_line(encode_request(id, batch));
  const std::string line = receive_line();

  json response;
  try {
    response = json::parse(line);
  } catch (const json::parse_error& e) {
    throw EndpointError("malformed response line from endpoint: " + std::string(e.what()));
  }
  if (!response.is_object() || !response.contains("id") || !response.contains("logits"))
    throw EndpointError("response must be an object with 'id' and 'logits'");
  if (!response["id"].is_number_integer() || response["id"].get<long long>() != id)
    throw EndpointError("response id does not match request id " + std::to_string(id));
  const auto& rows = response["logits"];
  if (!rows.is_array() || rows.size() != batch.rows)
    throw EndpointError("response has " + std::to_string(rows.is_array() ? rows.size() : 0) + " logit rows, expected " +
                        std::to_string(batch.rows));

  std::vector<double> out;
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() < 2) throw EndpointError("each logit row must hold at least two numbers");
    if (classes_ == 0) classes_ = row.size();
    if (row.size() != classes_)
      throw EndpointError("logit row has " + std::to_string(row.size()) + " entries, expected " +
                          std::to_string(classes_));
    for (const auto& v : row) {
      if (!v.is_number()) throw EndpointError("logit entries must be numbers");
      out.push_back(v.get<double>());
    }
  }
  return out;
}

}  // namespace freqrise
