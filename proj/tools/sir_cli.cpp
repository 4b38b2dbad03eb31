#include <cstdio>

int main() {
  std::puts("sir: placeholder");
  return 0;
}
