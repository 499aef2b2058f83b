#include "sentipipe/error.hpp"

namespace sentipipe {

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::DataFormat: return 3;
    case ErrorKind::Numerical: return 4;
    case ErrorKind::Transport: return 5;
  }
  return 1;
}

const char* kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "config error";
    case ErrorKind::DataFormat: return "format error";
    case ErrorKind::Numerical: return "numerical error";
    case ErrorKind::Transport: return "transport error";
  }
  return "error";
}

}  // namespace sentipipe
