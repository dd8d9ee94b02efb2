// Two differently named critical sections guard the same variable.
int hits;

int main() {
#pragma omp parallel
  {
#pragma omp critical(left)
    hits = hits + 1;
#pragma omp critical(right)
    hits = hits * 2;
  }
}
