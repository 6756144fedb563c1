

@SuppressWarnings("unchecked")
public record ComparableBox<T extends Comparable<T>>(T value) implements Comparable<ComparableBox<T>> {
    public <R extends Comparable<R>> ComparableBox<R> map(Function<T, R> f) { return new ComparableBox<>(f.apply(value)); }

    @Override
    public int compareTo(ComparableBox<T> other) {
        return value.compareTo(other.value);
    }

    static ComparableBox<Integer> of(int x) {
        ComparableBox<Integer> b = new ComparableBox<>(x);
        return b.value() >= 0 ? b : new ComparableBox<>(-x);
    }
}
