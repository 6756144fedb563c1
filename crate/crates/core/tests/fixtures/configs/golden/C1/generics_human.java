package lab.week9;

import lab.week9.model.Pair;
import java.util.function.Function;

@SuppressWarnings("unchecked")
public record Box<T extends Comparable<T>>(T value) implements Comparable<Box<T>> {
    public <R extends Comparable<R>> Box<R> map(Function<T, R> f) { return new Box<>(f.apply(value)); }

    @Override
    public int compareTo(Box<T> other) {
        return value.compareTo(other.value); // natural order
    }

    static Box<Integer> of(int x) {
        Box<Integer> b = new Box<>(x);
        return b.value() >= 0 ? b : new Box<>(-x);
    }
}
