#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "lethe/model.hpp"
#include "lethe/synthetic.hpp"

namespace lethe::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("lethe-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline AssociationModel synthetic_model(std::size_t concepts, std::size_t facts,
                                        std::uint64_t seed, ModelConfig config = {}) {
  config.seed = seed;
  KnowledgeBase kb = synthetic_knowledge_base(concepts, facts, seed);
  return build_model(std::move(kb.vocabulary), std::move(kb.facts), config);
}

// The seeded 50-concept, 200-fact model with library defaults.
inline const AssociationModel& reference_model() {
  static const AssociationModel model = synthetic_model(50, 200, 42);
  return model;
}

inline std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("c" + std::to_string(i));
  return out;
}

inline Matrix random_unit_columns(Eigen::Index dim, Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Matrix m(dim, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) m(i, j) = gauss(rng);
    m.col(j).normalize();
  }
  return m;
}

}  // namespace lethe::testing

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>

namespace lethe::testing {

// Asks the kernel for an unused loopback port.
inline int free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

}  // namespace lethe::testing
